"""Discrete input spaces of fixed-length token sequences.

A space is ``{0..N}^D``: every sequence has exactly ``length`` tokens, each
an integer in ``[0, vocab_size - 1]``.  Sequences are plain numpy integer
arrays; the space object carries the metadata needed for enumeration,
uniform sampling, and stable hashing.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Iterator

import numpy as np

__all__ = ["InputSpace", "canonical_hash"]


@dataclass(frozen=True)
class InputSpace:
    """Fixed-length sequence space with exact total size.

    Parameters
    ----------
    vocab_size : int
        Number of distinct token values (tokens take values ``0..vocab_size-1``).
    length : int
        Sequence length D.
    """

    vocab_size: int
    length: int

    def __post_init__(self):
        if self.vocab_size < 2:
            raise ValueError(f"vocab_size must be >= 2, got {self.vocab_size}")
        if self.length < 1:
            raise ValueError(f"length must be >= 1, got {self.length}")

    @property
    def total_size(self) -> int:
        # Python ints are arbitrary precision; (N+1)^D overflows 64 bits
        # for realistic LM spaces.
        return self.vocab_size ** self.length

    def contains(self, seq: np.ndarray) -> bool:
        seq = np.asarray(seq)
        return (
            seq.ndim == 1
            and len(seq) == self.length
            and bool((seq >= 0).all())
            and bool((seq < self.vocab_size).all())
        )

    def validate(self, seq: np.ndarray) -> np.ndarray:
        seq = np.asarray(seq, dtype=np.int64)
        if not self.contains(seq):
            raise ValueError(f"sequence {seq!r} not in {self}")
        return seq

    def index_of(self, seq: np.ndarray) -> int:
        """Lexicographic rank of a sequence (token 0 is most significant)."""
        idx = 0
        for t in np.asarray(seq):
            idx = idx * self.vocab_size + int(t)
        return idx

    def sequence_at(self, index: int) -> np.ndarray:
        """Inverse of index_of."""
        if not 0 <= index < self.total_size:
            raise IndexError(index)
        out = np.zeros(self.length, dtype=np.int64)
        for pos in range(self.length - 1, -1, -1):
            index, out[pos] = divmod(index, self.vocab_size)
        return out

    def enumerate(self) -> Iterator[np.ndarray]:
        """Yield every sequence exactly once in lexicographic order.

        Infeasibly large spaces simply never terminate; callers enforce
        their own budget.
        """
        seq = np.zeros(self.length, dtype=np.int64)
        top = self.vocab_size - 1
        while True:
            yield seq.copy()
            pos = self.length - 1
            while pos >= 0 and seq[pos] == top:
                seq[pos] = 0
                pos -= 1
            if pos < 0:
                return
            seq[pos] += 1

    def enumerate_batches(self, batch_size: int = 1 << 16) -> Iterator[np.ndarray]:
        """Lexicographic enumeration as 2-D arrays of shape (b, length).

        Vectorized fast path used by brute-force validation; concatenating
        all batches equals ``enumerate`` row for row.
        """
        total = self.total_size
        start = 0
        while start < total:
            n = min(batch_size, total - start)
            idx = np.arange(start, start + n, dtype=np.int64)
            out = np.empty((n, self.length), dtype=np.int64)
            for pos in range(self.length - 1, -1, -1):
                idx, out[:, pos] = np.divmod(idx, self.vocab_size)
            yield out
            start += n

    def uniform_sample(self, rng: np.random.Generator) -> np.ndarray:
        """One sequence with every token independently uniform over the vocab."""
        return rng.integers(0, self.vocab_size, size=self.length, dtype=np.int64)


def canonical_hash(seq: np.ndarray) -> int:
    """Stable 64-bit digest of a token sequence.

    Identical across runs and platforms; order-sensitive.  Used to
    deduplicate sampled inputs.
    """
    tokens = np.asarray(seq, dtype=np.int64)
    payload = struct.pack(f"<{len(tokens)}q", *tokens.tolist())
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little")
