"""Brute-force ground truth on enumerable spaces.

Everything the samplers estimate can be computed exactly when the space
fits in an iteration budget: the output distribution by full enumeration
(with a dynamic-programming fast path for token-sum models), per-bin
precision under an oracle annotator, and chain stationarity against exact
Boltzmann weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .histogram import BinGrid, NormalizationState, OutputDistribution
from .models import EnergyModel, OracleAnnotator, SumEnergy
from .evaluator import PrecisionPerBin
from .samplers import ChainState, ProposalKernel, metropolis_step
from .space import InputSpace

__all__ = [
    "EnumerationBudgetError",
    "sum_energy_counts",
    "exact_output_distribution",
    "exact_precision_per_bin",
    "entropy_divergence",
    "stationarity_test",
]

DEFAULT_ENUMERATION_CAP = 10 ** 8


class EnumerationBudgetError(ValueError):
    def __init__(self, total, cap):
        super().__init__(
            f"space has {total} sequences, above the cap {cap}; "
            f"raise the cap or use a sampler")
        self.required = total


def sum_energy_counts(space: InputSpace) -> np.ndarray:
    """Exact count of sequences per token sum, 0..(vocab_size-1)*length.

    Composition counting by repeated polynomial convolution; counts stay
    below 2^63 for every desk-scale space.
    """
    one = np.ones(space.vocab_size, dtype=np.int64)
    acc = np.array([1], dtype=np.int64)
    for _ in range(space.length):
        acc = np.convolve(acc, one)
    return acc


def exact_output_distribution(space: InputSpace, model: EnergyModel,
                              grid: BinGrid, cap: int = DEFAULT_ENUMERATION_CAP,
                              method: str = "auto",
                              batch_size: int = 1 << 16) -> OutputDistribution:
    """Exact per-bin counts, normalized so the total equals the space size.

    ``method`` is "enumerate", "dp" (SumEnergy only), or "auto" which picks
    the DP path when available.
    """
    if method == "auto":
        method = "dp" if isinstance(model, SumEnergy) else "enumerate"
    hist = OutputDistribution.empty(grid)
    if method == "dp":
        if not isinstance(model, SumEnergy):
            raise ValueError("dp fast path only applies to SumEnergy")
        counts = sum_energy_counts(space)
        for s, c in enumerate(counts):
            if c > 0:
                k = grid.bin_of(float(s))
                hist.record_visit(k, float(c))
    elif method == "enumerate":
        if space.total_size > cap:
            raise EnumerationBudgetError(space.total_size, cap)
        for batch in space.enumerate_batches(batch_size):
            zs = model.score_batch(batch)
            ks = np.array([grid.bin_of(float(z)) for z in zs])
            for k, c in zip(*np.unique(ks, return_counts=True)):
                hist.record_visit(int(k), float(c))
    else:
        raise ValueError(f"unknown method {method!r}")
    return hist.normalize_to_space(space)


def exact_precision_per_bin(space: InputSpace, model: EnergyModel,
                            annotator: OracleAnnotator, grid: BinGrid,
                            cap: int = DEFAULT_ENUMERATION_CAP,
                            batch_size: int = 1 << 14) -> PrecisionPerBin:
    """Mean oracle score over every input in each bin; empty bins are NaN."""
    if space.total_size > cap:
        raise EnumerationBudgetError(space.total_size, cap)
    score_sum = np.zeros(grid.bin_count)
    count = np.zeros(grid.bin_count, dtype=np.int64)
    for batch in space.enumerate_batches(batch_size):
        zs = model.score_batch(batch)
        for seq, z in zip(batch, zs):
            k = grid.bin_of(float(z))
            score_sum[k] += annotator.annotate(seq)
            count[k] += 1
    with np.errstate(invalid="ignore"):
        r = np.where(count > 0, score_sum / np.maximum(count, 1), np.nan)
    return PrecisionPerBin(grid, r, support=count)


def entropy_divergence(estimated: OutputDistribution,
                       exact: OutputDistribution,
                       mass_coverage: float = 0.99) -> tuple[float, float]:
    """(max, mean) absolute deviation of anchored entropies.

    Compared over the smallest bin set covering at least ``mass_coverage``
    of the exact mass, both estimates anchored at the exact mode so the
    samplers' arbitrary additive constants drop out.
    """
    if estimated.grid != exact.grid:
        raise ValueError("grids differ")
    log_exact = exact.log_counts
    order = np.argsort(log_exact)[::-1]
    total = np.logaddexp.reduce(log_exact[np.isfinite(log_exact)])
    target = total + math.log(mass_coverage)
    chosen = []
    acc = -math.inf
    for k in order:
        if not np.isfinite(log_exact[k]):
            break
        chosen.append(int(k))
        acc = np.logaddexp(acc, log_exact[k])
        if acc >= target:
            break
    reference = chosen[0]
    if not np.isfinite(estimated.log_counts[reference]):
        raise ValueError(f"estimate never visited the reference bin {reference}")
    est_anchor = estimated.entropy_anchor(reference)
    exact_anchor = exact.entropy_anchor(reference)
    devs = np.abs(est_anchor[chosen] - exact_anchor[chosen])
    if not np.all(np.isfinite(devs)):
        missing = [k for k, d in zip(chosen, devs) if not np.isfinite(d)]
        raise ValueError(f"estimate never visited covered bins {missing}")
    return float(devs.max()), float(devs.mean())


MAX_STATIONARITY_STATES = 4096


def stationarity_test(model: EnergyModel, kernel: ProposalKernel,
                      temperature: float, steps: int, rng_seed: int,
                      burn_in: int | None = None,
                      thin: int | None = None) -> tuple[float, float]:
    """Chi-square test of chain occupancy against exact Boltzmann weights.

    Enumerates the full space (must be small), runs one chain, and compares
    the thinned empirical state distribution to exp(g/T)/Z.  Cells with
    expected count below 5 are pooled.  Returns (statistic, p_value).
    """
    space = model.space
    total = space.total_size
    if total > MAX_STATIONARITY_STATES:
        raise EnumerationBudgetError(total, MAX_STATIONARITY_STATES)
    if burn_in is None:
        burn_in = max(1000, steps // 10)
    if thin is None:
        thin = 5 * space.length

    batch = next(space.enumerate_batches(int(total)))
    zs = model.score_batch(batch)
    g = np.array([model.negative_energy(float(z)) for z in zs])
    log_w = g / temperature
    log_w -= np.logaddexp.reduce(log_w)
    probs = np.exp(log_w)

    rng = np.random.default_rng(rng_seed)
    state = ChainState.init(space, model, rng)
    observed = np.zeros(total, dtype=np.int64)
    n_recorded = 0
    for step in range(steps):
        metropolis_step(state, model, kernel, temperature, rng)
        if step >= burn_in and (step - burn_in) % thin == 0:
            observed[space.index_of(state.current)] += 1
            n_recorded += 1

    expected = probs * n_recorded
    obs_pooled, exp_pooled = _pool_small_cells(observed, expected)
    stat, p = stats.chisquare(obs_pooled, exp_pooled)
    return float(stat), float(p)


def _pool_small_cells(observed, expected, min_expected: float = 5.0):
    """Merge cells with small expectation into one pooled cell."""
    big = expected >= min_expected
    obs = list(observed[big].astype(float))
    exp = list(expected[big])
    small_obs = observed[~big].sum()
    small_exp = expected[~big].sum()
    if small_exp > 0:
        obs.append(float(small_obs))
        exp.append(float(small_exp))
    obs = np.array(obs)
    exp = np.array(exp)
    # chisquare requires matching totals; renormalize the tiny float slack
    exp *= obs.sum() / exp.sum()
    return obs, exp
