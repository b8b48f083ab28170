"""Samplers for the output distribution.

Four pieces:

* proposal kernels over token sequences (uniform single-site, and a
  locally informed kernel whose forward and backward proposals share one
  inverse-strength beta),
* fixed-temperature Metropolis chains targeting p(x) ~ exp(g(x)/T),
* Wang-Landau flat-histogram estimation of the entropy S(z) = log rho(z),
* parallel tempering with multi-histogram (WHAM-style) reweighting.

Internally every sampler maximizes the "negative energy" g = +z for
HIGHER_IS_CONFIDENT models and g = -z for LOWER_IS_CONFIDENT ones, so a
low-NLL sequence and a high-logit sequence are both "uphill".
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .histogram import BinGrid, NormalizationState, OutputDistribution
from .models import EnergyModel
from .reservoir import BinReservoir
from .space import InputSpace

__all__ = [
    "KernelKind",
    "ProposalKernel",
    "ChainState",
    "metropolis_step",
    "shared_beta_propose",
    "WLConfig",
    "wang_landau_run",
    "PTConfig",
    "PTHistograms",
    "pt_run",
    "reweight",
    "ReweightingGapError",
]


class KernelKind(enum.Enum):
    SINGLE_SITE_UNIFORM = "uniform"
    SHARED_BETA_INFORMED = "shared_beta"


def _softmax_log(weights_log: np.ndarray) -> np.ndarray:
    return weights_log - logsumexp(weights_log)


def shared_beta_propose(model: EnergyModel, seq: np.ndarray, beta: float,
                        sites: np.ndarray, rng: np.random.Generator):
    """Locally informed multi-site proposal with one shared beta.

    At each chosen site the proposal weight for token v is
    exp(beta * score(seq with site := v)).  The backward probability is
    evaluated with the SAME beta.  Because the single-site score array at a
    site does not depend on the token currently at that site, the forward
    and backward weight arrays per site coincide, and the accumulated
    log q_forward - log q_backward is beta * (s[new] - s[old]) summed over
    sites.

    Returns (proposed sequence, log q_forward - log q_backward).
    """
    work = np.asarray(seq).copy()
    log_ratio = 0.0
    for pos in sites:
        scores = model.single_site_scores(work, int(pos))
        logp = _softmax_log(beta * scores)
        new_tok = int(rng.choice(len(logp), p=np.exp(logp)))
        old_tok = int(work[pos])
        log_ratio += beta * (scores[new_tok] - scores[old_tok])
        work[pos] = new_tok
    return work, log_ratio


@dataclass
class ProposalKernel:
    kind: KernelKind = KernelKind.SINGLE_SITE_UNIFORM
    beta_range: tuple[float, float] = (-2.0, 2.0)
    sites_per_step: int = 1

    def __post_init__(self):
        if self.sites_per_step < 1:
            raise ValueError("sites_per_step must be >= 1")
        lo, hi = self.beta_range
        if not lo < 0 < hi:
            raise ValueError("beta_range must straddle 0")

    def propose(self, model: EnergyModel, seq: np.ndarray,
                rng: np.random.Generator):
        """Returns (proposed sequence, log q_forward - log q_backward)."""
        D = len(seq)
        n_sites = min(self.sites_per_step, D)
        sites = rng.choice(D, size=n_sites, replace=False)
        if self.kind is KernelKind.SINGLE_SITE_UNIFORM:
            work = np.asarray(seq).copy()
            for pos in sites:
                work[pos] = rng.integers(0, model.space.vocab_size)
            return work, 0.0
        beta = rng.uniform(*self.beta_range)
        return shared_beta_propose(model, seq, beta, sites, rng)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "beta_range": list(self.beta_range),
                "sites_per_step": self.sites_per_step}


@dataclass
class ChainState:
    current: np.ndarray
    current_z: float
    steps: int = 0
    accepted: int = 0

    @classmethod
    def init(cls, space: InputSpace, model: EnergyModel,
             rng: np.random.Generator) -> "ChainState":
        seq = space.uniform_sample(rng)
        return cls(seq, model.score(seq))


def metropolis_step(state: ChainState, model: EnergyModel,
                    kernel: ProposalKernel, temperature: float,
                    rng: np.random.Generator) -> ChainState:
    """One Metropolis-Hastings transition targeting p(x) ~ exp(g(x)/T).

    Acceptance = min(1, exp((g(x') - g(x))/T) * q(x|x')/q(x'|x)).
    Mutates and returns the state.
    """
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    proposal, log_ratio = kernel.propose(model, state.current, rng)
    z_new = model.score(proposal)
    g_old = model.negative_energy(state.current_z)
    g_new = model.negative_energy(z_new)
    if math.isinf(temperature):
        log_acc = -log_ratio
    else:
        log_acc = (g_new - g_old) / temperature - log_ratio
    state.steps += 1
    if log_acc >= 0 or rng.random() < math.exp(log_acc):
        state.current = proposal
        state.current_z = z_new
        state.accepted += 1
    return state


# ---------------------------------------------------------------------------
# Wang-Landau
# ---------------------------------------------------------------------------

@dataclass
class WLConfig:
    initial_log_f: float = 1.0
    flatness_ratio: float = 0.8
    log_f_floor: float = 1e-4
    check_interval: int = 1000
    max_steps: int = 5_000_000
    stagnation_budget: int = 500_000

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("initial_log_f", "flatness_ratio", "log_f_floor",
                 "check_interval", "max_steps", "stagnation_budget")}


def wang_landau_run(space: InputSpace, model: EnergyModel, grid: BinGrid,
                    kernel: ProposalKernel, config: WLConfig,
                    rng_seed: int, reservoir_capacity: int = 30):
    """Flat-histogram estimation of S(z) up to an additive constant.

    Acceptance is min(1, exp(S[bin(x)] - S[bin(x')]) * q-ratio); after every
    step S at the current bin grows by log_f and the visit histogram
    increments.  When the visit histogram is flat (min >= flatness_ratio *
    mean over bins seen so far) the visits reset and log_f halves;
    the run ends when log_f <= log_f_floor or at max_steps.  Representative
    inputs are collected only during the final stage, where S is
    essentially frozen.

    Returns (OutputDistribution in RELATIVE_ENTROPY state, BinReservoir,
    diagnostics dict).
    """
    rng = np.random.default_rng(rng_seed)
    B = grid.bin_count
    S = np.zeros(B)
    stage_visits = np.zeros(B, dtype=np.int64)
    total_visits = np.zeros(B, dtype=np.int64)
    ever = np.zeros(B, dtype=bool)
    reservoir = BinReservoir(capacity=reservoir_capacity)

    state = ChainState.init(space, model, rng)
    b = grid.bin_of(state.current_z)
    log_f = config.initial_log_f
    final_stage = log_f / 2.0 <= config.log_f_floor
    schedule = [log_f]
    flatness_history = []
    last_new_bin_step = 0
    stagnation_warned = False
    step = 0

    while step < config.max_steps:
        step += 1
        proposal, log_ratio = kernel.propose(model, state.current, rng)
        z_new = model.score(proposal)
        b_new = grid.bin_of(z_new)
        log_acc = S[b] - S[b_new] - log_ratio
        if log_acc >= 0 or rng.random() < math.exp(log_acc):
            state.current = proposal
            state.current_z = z_new
            state.accepted += 1
            b = b_new
        state.steps += 1
        S[b] += log_f
        stage_visits[b] += 1
        total_visits[b] += 1
        if not ever[b]:
            ever[b] = True
            last_new_bin_step = step
        if final_stage:
            reservoir.offer(b, state.current, state.current_z, rng)
        if step % config.check_interval == 0:
            seen = stage_visits[ever]
            if len(seen) > 0:
                lo, mean = seen.min(), seen.mean()
                flatness_history.append(
                    {"step": step, "log_f": log_f, "min": int(lo),
                     "mean": float(mean)})
                if lo >= config.flatness_ratio * mean:
                    stage_visits[:] = 0
                    log_f /= 2.0
                    if log_f <= config.log_f_floor:
                        break
                    schedule.append(log_f)
                    final_stage = log_f / 2.0 <= config.log_f_floor
            if (step - last_new_bin_step > config.stagnation_budget
                    and not stagnation_warned and not ever.all()):
                warnings.warn(
                    f"no new bin discovered in {config.stagnation_budget} "
                    f"steps ({int(ever.sum())}/{B} bins reached); kernel may "
                    "be non-ergodic on this grid")
                stagnation_warned = True

    log_counts = np.where(ever, S, -np.inf)
    hist = OutputDistribution(grid, log_counts,
                              NormalizationState.RELATIVE_ENTROPY,
                              visits=total_visits)
    diagnostics = {
        "steps": step,
        "accepted": state.accepted,
        "log_f_schedule": schedule,
        "final_log_f": log_f,
        "flatness_history": flatness_history,
        "bins_reached": int(ever.sum()),
        "converged": log_f <= config.log_f_floor,
    }
    return hist, reservoir, diagnostics


# ---------------------------------------------------------------------------
# Parallel tempering + reweighting
# ---------------------------------------------------------------------------

@dataclass
class PTConfig:
    temperatures: tuple[float, ...]
    swap_interval: int = 10
    steps_per_replica: int = 100_000
    burn_in: int = 0

    def __post_init__(self):
        temps = tuple(float(t) for t in self.temperatures)
        if len(temps) < 2:
            raise ValueError("need at least 2 temperatures")
        if any(t <= 0 for t in temps):
            raise ValueError("temperatures must be > 0")
        if any(a <= b for a, b in zip(temps, temps[1:])):
            raise ValueError("temperature ladder must be strictly descending")
        object.__setattr__(self, "temperatures", temps)

    @classmethod
    def geometric(cls, t_hot: float, t_cold: float, k: int = 8,
                  **kw) -> "PTConfig":
        temps = np.geomspace(t_hot, t_cold, k)
        return cls(tuple(temps), **kw)

    def to_dict(self) -> dict:
        return {"temperatures": list(self.temperatures),
                "swap_interval": self.swap_interval,
                "steps_per_replica": self.steps_per_replica,
                "burn_in": self.burn_in}


def pt_rngs(rng_seed: int, k: int):
    """Deterministic per-replica RNG streams plus one auxiliary stream.

    Replica j of a PT run with seed s is bit-identical to a fixed-T chain
    driven by ``pt_rngs(s, k)[0][j]`` when swaps never trigger.
    """
    children = np.random.SeedSequence(rng_seed).spawn(k + 1)
    return ([np.random.default_rng(c) for c in children[:k]],
            np.random.default_rng(children[k]))


@dataclass
class PTHistograms:
    """Per-temperature visit counts plus per-bin mean energies."""

    grid: BinGrid
    temperatures: tuple[float, ...]
    counts: np.ndarray        # (K, B) int64 visit counts
    z_sums: np.ndarray        # (K, B) sum of observed z per bin
    n_samples: np.ndarray     # (K,) recorded samples per replica

    def mean_z(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.where(self.counts > 0, self.z_sums / self.counts, np.nan)


def pt_run(space: InputSpace, model: EnergyModel, grid: BinGrid,
           kernel: ProposalKernel, config: PTConfig, rng_seed: int,
           reservoir_capacity: int = 30):
    """Replica-exchange sampling at a descending temperature ladder.

    Adjacent replicas propose a state swap every swap_interval steps,
    accepted with min(1, exp((1/T_i - 1/T_j) * (g_j - g_i))) which
    preserves the product of the replica Boltzmann distributions.

    Each replica owns an independent RNG stream (spawned from the seed), so
    with swaps disabled a replica reproduces the corresponding fixed-T
    chain bit for bit.

    Returns (PTHistograms, BinReservoir, diagnostics).
    """
    temps = config.temperatures
    K = len(temps)
    B = grid.bin_count
    replica_rng, aux_rng = pt_rngs(rng_seed, K)
    states = [ChainState.init(space, model, replica_rng[k]) for k in range(K)]
    counts = np.zeros((K, B), dtype=np.int64)
    z_sums = np.zeros((K, B))
    n_samples = np.zeros(K, dtype=np.int64)
    swap_attempts = np.zeros(K - 1, dtype=np.int64)
    swap_accepts = np.zeros(K - 1, dtype=np.int64)
    reservoir = BinReservoir(capacity=reservoir_capacity)

    inv_t = np.array([0.0 if math.isinf(t) else 1.0 / t for t in temps])

    for step in range(1, config.steps_per_replica + 1):
        for k in range(K):
            metropolis_step(states[k], model, kernel, temps[k], replica_rng[k])
            if step > config.burn_in:
                z = states[k].current_z
                b = grid.bin_of(z)
                counts[k, b] += 1
                z_sums[k, b] += z
                n_samples[k] += 1
                reservoir.offer(b, states[k].current, z, aux_rng,
                                temperature=temps[k])
        if step % config.swap_interval == 0:
            for i in range(K - 1):
                j = i + 1
                g_i = model.negative_energy(states[i].current_z)
                g_j = model.negative_energy(states[j].current_z)
                log_acc = (inv_t[i] - inv_t[j]) * (g_j - g_i)
                swap_attempts[i] += 1
                if log_acc >= 0 or aux_rng.random() < math.exp(log_acc):
                    states[i], states[j] = states[j], states[i]
                    swap_accepts[i] += 1

    hists = PTHistograms(grid, temps, counts, z_sums, n_samples)
    with np.errstate(invalid="ignore"):
        swap_rates = np.where(swap_attempts > 0,
                              swap_accepts / np.maximum(swap_attempts, 1),
                              np.nan)
    diagnostics = {
        "swap_attempts": swap_attempts.tolist(),
        "swap_accepts": swap_accepts.tolist(),
        "swap_rates": swap_rates.tolist(),
        "acceptance": [s.accepted / max(s.steps, 1) for s in states],
    }
    return hists, reservoir, diagnostics


class ReweightingGapError(ValueError):
    pass


def reweight(hists: PTHistograms, model_direction_sign: float = -1.0,
             tol: float = 1e-8, max_iter: int = 10_000) -> OutputDistribution:
    """Combine per-temperature histograms into one log rho estimate.

    Standard multi-histogram self-consistency in log space:

        ln rho(z) = ln sum_k n_k(z)
                    - logsumexp_k [ ln N_k - ln Z_k + g(z)/T_k ]
        ln Z_k    = logsumexp_z [ ln rho(z) + g(z)/T_k ]

    with g(z) = sign * z_mid, the bin-midpoint negative energy.  Iterated
    until the free energies move by less than tol.  Adjacent temperatures
    must share at least one visited bin.
    """
    counts = hists.counts
    K, B = counts.shape
    visited_any = counts.sum(axis=0) > 0
    for i in range(K - 1):
        if not np.any((counts[i] > 0) & (counts[i + 1] > 0)):
            raise ReweightingGapError(
                f"no visited-bin overlap between T={hists.temperatures[i]} "
                f"and T={hists.temperatures[i + 1]}")

    inv_t = np.array([0.0 if math.isinf(t) else 1.0 / t
                      for t in hists.temperatures])
    g = model_direction_sign * hists.grid.midpoints()
    log_n_tot = np.full(B, -np.inf)
    log_n_tot[visited_any] = np.log(counts.sum(axis=0)[visited_any])
    log_N = np.log(hists.n_samples.astype(float))
    log_Z = np.zeros(K)

    bias = np.outer(inv_t, g)  # (K, B): g(z)/T_k
    for _ in range(max_iter):
        # denominator per bin: logsumexp over k of ln N_k - ln Z_k + g/T_k
        denom = logsumexp(log_N[:, None] - log_Z[:, None] + bias, axis=0)
        log_rho = np.where(visited_any, log_n_tot - denom, -np.inf)
        new_log_Z = logsumexp(log_rho[None, :] + bias, axis=1)
        new_log_Z -= new_log_Z[0]  # gauge: anchor the first replica
        delta = np.max(np.abs(new_log_Z - log_Z))
        log_Z = new_log_Z
        if delta < tol:
            break
    denom = logsumexp(log_N[:, None] - log_Z[:, None] + bias, axis=0)
    log_rho = np.where(visited_any, log_n_tot - denom, -np.inf)
    return OutputDistribution(hists.grid, log_rho,
                              NormalizationState.RELATIVE_ENTROPY,
                              visits=counts.sum(axis=0))
