"""Scalar scoring functions over sequences, plus oracle annotators.

A model maps a sequence to a real output ``z`` and declares which end of
the z axis is the "confident" one (low NLL vs. high logit).  Samplers and
evaluators consume only this interface, so analytic stand-ins, n-gram
language models, and external processes are interchangeable.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .space import InputSpace

__all__ = [
    "Direction",
    "EnergyModel",
    "SumEnergy",
    "NGramModel",
    "OracleAnnotator",
    "ModuloAnnotator",
    "ThresholdAnnotator",
]


class Direction(enum.Enum):
    """Which end of the output axis means "the model is confident"."""

    LOWER_IS_CONFIDENT = "lower"   # e.g. NLL
    HIGHER_IS_CONFIDENT = "higher"  # e.g. logit

    @property
    def sign(self) -> float:
        """Multiplier turning z into a quantity the sampler maximizes."""
        return -1.0 if self is Direction.LOWER_IS_CONFIDENT else 1.0


class EnergyModel:
    """Base scoring interface: deterministic ``score(seq) -> z``."""

    name: str = "model"
    direction: Direction = Direction.LOWER_IS_CONFIDENT
    space: InputSpace

    def score(self, seq: np.ndarray) -> float:
        raise NotImplementedError

    def score_batch(self, seqs: np.ndarray) -> np.ndarray:
        """Element-wise score of a (n, D) array; order preserved."""
        return np.array([self.score(s) for s in np.asarray(seqs)], dtype=float)

    def single_site_scores(self, seq: np.ndarray, position: int) -> np.ndarray:
        """z for every token value substituted at one position.

        Entry ``v`` equals ``score(seq with seq[position] = v)``.  Subclasses
        may override with a fast path; it must match this exhaustive
        definition within 1e-6.
        """
        seq = np.asarray(seq)
        out = np.empty(self.space.vocab_size, dtype=float)
        work = seq.copy()
        for v in range(self.space.vocab_size):
            work[position] = v
            out[v] = self.score(work)
        return out

    def negative_energy(self, z: float) -> float:
        """Signed score the sampler maximizes (Boltzmann log-weight at T=1)."""
        return self.direction.sign * z


@dataclass
class SumEnergy(EnergyModel):
    """Token-sum model: z(x) = sum(x), lower is confident.

    Enumerable stand-in whose exact output distribution is a composition
    count, so every estimate can be checked against ground truth.
    """

    space: InputSpace
    name: str = "sum"
    direction: Direction = field(default=Direction.LOWER_IS_CONFIDENT)

    def score(self, seq) -> float:
        return float(np.sum(seq))

    def score_batch(self, seqs) -> np.ndarray:
        return np.asarray(seqs).sum(axis=1).astype(float)

    def single_site_scores(self, seq, position) -> np.ndarray:
        base = float(np.sum(seq)) - float(seq[position])
        return base + np.arange(self.space.vocab_size, dtype=float)


class NGramModel(EnergyModel):
    """Additively smoothed n-gram LM scored as mean per-token NLL.

    z(x) = -(1/D) sum_i log p(x_i | x_{i-n+1..i-1}) with begin-of-sequence
    padding.  Smoothing alpha > 0 gives every sequence finite z, which MCMC
    ergodicity requires.
    """

    BOS = -1  # context padding token, never a predicted value

    def __init__(self, space: InputSpace, order: int = 2, alpha: float = 0.1,
                 name: str = "ngram"):
        if order < 1:
            raise ValueError("order must be >= 1")
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        self.space = space
        self.order = order
        self.alpha = alpha
        self.name = name
        self.direction = Direction.LOWER_IS_CONFIDENT
        self.counts: dict[tuple, np.ndarray] = {}

    def _context(self, seq, i) -> tuple:
        ctx = [self.BOS] * max(0, self.order - 1 - i)
        ctx += [int(t) for t in seq[max(0, i - self.order + 1):i]]
        return tuple(ctx)

    def fit(self, sequences) -> "NGramModel":
        for seq in sequences:
            seq = np.asarray(seq)
            for i, tok in enumerate(seq):
                ctx = self._context(seq, i)
                row = self.counts.get(ctx)
                if row is None:
                    row = np.zeros(self.space.vocab_size, dtype=np.int64)
                    self.counts[ctx] = row
                row[int(tok)] += 1
        self._log_probs = {}
        return self

    def _log_prob_row(self, ctx: tuple) -> np.ndarray:
        cached = getattr(self, "_log_probs", None)
        if cached is None:
            cached = self._log_probs = {}
        row = cached.get(ctx)
        if row is None:
            counts = self.counts.get(ctx)
            V = self.space.vocab_size
            if counts is None:
                counts = np.zeros(V, dtype=np.int64)
            smoothed = counts + self.alpha
            total = smoothed.sum()
            if total == 0:
                # alpha = 0 and unseen context: uniform fallback
                row = np.full(V, -np.log(V))
            else:
                with np.errstate(divide="ignore"):
                    row = np.log(smoothed) - np.log(total)
            cached[ctx] = row
        return row

    def token_log_prob(self, seq, i) -> float:
        return float(self._log_prob_row(self._context(seq, i))[int(seq[i])])

    def score(self, seq) -> float:
        seq = np.asarray(seq)
        total = sum(self.token_log_prob(seq, i) for i in range(len(seq)))
        return -total / len(seq)

    def single_site_scores(self, seq, position) -> np.ndarray:
        # Changing token i touches the NLL terms for positions i..i+order-1.
        seq = np.asarray(seq)
        D = len(seq)
        affected = range(position, min(D, position + self.order))
        base = sum(self.token_log_prob(seq, i) for i in range(D)
                   if i not in affected)
        out = np.empty(self.space.vocab_size, dtype=float)
        work = seq.copy()
        for v in range(self.space.vocab_size):
            work[position] = v
            part = sum(self.token_log_prob(work, i) for i in affected)
            out[v] = -(base + part) / D
        return out

    # -- persistence (used by the external-adapter round trip and the CLI) --

    def to_json(self) -> str:
        payload = {
            "vocab_size": self.space.vocab_size,
            "length": self.space.length,
            "order": self.order,
            "alpha": self.alpha,
            "name": self.name,
            "counts": [[list(ctx), row.tolist()] for ctx, row in self.counts.items()],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "NGramModel":
        payload = json.loads(text)
        space = InputSpace(payload["vocab_size"], payload["length"])
        model = cls(space, order=payload["order"], alpha=payload["alpha"],
                    name=payload["name"])
        for ctx, row in payload["counts"]:
            model.counts[tuple(ctx)] = np.asarray(row, dtype=np.int64)
        return model


class OracleAnnotator:
    """Deterministic machine annotator: sequence -> score in [0, 1]."""

    name: str = "oracle"

    def annotate(self, seq: np.ndarray) -> float:
        raise NotImplementedError


@dataclass
class ModuloAnnotator(OracleAnnotator):
    """1.0 when the token sum is divisible by the modulus, else 0.0."""

    modulus: int = 30

    @property
    def name(self) -> str:
        return f"modulo:{self.modulus}"

    def annotate(self, seq) -> float:
        return 1.0 if int(np.sum(seq)) % self.modulus == 0 else 0.0


@dataclass
class ThresholdAnnotator(OracleAnnotator):
    """1.0 when a model scores the sequence on the confident side of a cut.

    Handy for constructing two-model comparison fixtures with enumerable
    ground truth.
    """

    model: EnergyModel
    threshold: float

    @property
    def name(self) -> str:
        return f"threshold:{self.model.name}@{self.threshold}"

    def annotate(self, seq) -> float:
        z = self.model.score(seq)
        if self.model.direction is Direction.LOWER_IS_CONFIDENT:
            return 1.0 if z <= self.threshold else 0.0
        return 1.0 if z >= self.threshold else 0.0
