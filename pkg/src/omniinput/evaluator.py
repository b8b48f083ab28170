"""Precision-recall over the input space from r(z) and rho(z).

Precision at a confidence cut lambda is the rho-weighted average of the
per-bin precision over every bin on the confident side of the cut;
unnormalized recall is the corresponding weighted sum.  rho ratios across
bins can exceed e^300, so all weighted sums run in log space.

The cut is bin-granular: lambda selects the bin containing it plus every
bin on the confident side (low z for NLL-like models, high z for
logit-like ones).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .histogram import BinGrid, OutputDistribution
from .models import Direction

__all__ = [
    "Window",
    "PrecisionPerBin",
    "PRPoint",
    "PRCurve",
    "MissingPrecisionError",
    "UndefinedPrecisionError",
    "included_bins",
    "precision_at",
    "recall_at",
    "pr_curve",
    "aupr",
    "dominant_bin_precision",
    "roc_unnormalized",
]


@dataclass(frozen=True)
class Window:
    """Closed output range [z_lo, z_hi] deemed interesting for annotation."""

    z_lo: float
    z_hi: float

    def __post_init__(self):
        if self.z_hi < self.z_lo:
            raise ValueError("z_hi must be >= z_lo")

    def contains(self, z: float) -> bool:
        return self.z_lo <= z <= self.z_hi

    def bin_range(self, grid: BinGrid) -> tuple[int, int]:
        """Inclusive (k_lo, k_hi) of bins intersecting the window."""
        k_lo = grid.bin_of(max(self.z_lo, grid.z_min))
        k_hi = grid.bin_of(min(self.z_hi, grid.z_max - grid.width * 1e-9))
        return k_lo, k_hi


class MissingPrecisionError(ValueError):
    def __init__(self, bins):
        super().__init__(f"no annotated precision for populated bins {bins}")
        self.bins = list(bins)


class UndefinedPrecisionError(ValueError):
    pass


@dataclass
class PrecisionPerBin:
    """Per-bin mean annotator score; NaN marks bins never annotated."""

    grid: BinGrid
    r: np.ndarray
    support: np.ndarray = field(default=None)

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        if len(self.r) != self.grid.bin_count:
            raise ValueError("r length != bin_count")
        finite = self.r[~np.isnan(self.r)]
        if len(finite) and (finite.min() < 0 or finite.max() > 1):
            raise ValueError("r values must lie in [0, 1]")
        if self.support is None:
            self.support = np.zeros(self.grid.bin_count, dtype=np.int64)

    def present(self, k: int) -> bool:
        return not math.isnan(self.r[k])


@dataclass
class PRPoint:
    lam: float
    recall_unnorm: float
    recall_unnorm_log: float
    recall_norm: float
    precision: float


@dataclass
class PRCurve:
    window: Window
    direction: Direction
    points: list[PRPoint]

    def write_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda", "recall_unnorm_log", "recall_norm",
                             "precision"])
            for p in self.points:
                writer.writerow([f"{p.lam:.10g}", f"{p.recall_unnorm_log:.17g}",
                                 f"{p.recall_norm:.17g}", f"{p.precision:.17g}"])


def included_bins(grid: BinGrid, lam: float, direction: Direction,
                  window: Window | None = None) -> np.ndarray:
    """Bin indices on the confident side of lambda, inside the window."""
    k_lam = grid.bin_of(lam)
    if direction is Direction.LOWER_IS_CONFIDENT:
        ks = np.arange(0, k_lam + 1)
    else:
        ks = np.arange(k_lam, grid.bin_count)
    if window is not None:
        k_lo, k_hi = window.bin_range(grid)
        ks = ks[(ks >= k_lo) & (ks <= k_hi)]
    return ks


def _log_weighted_sums(r: PrecisionPerBin, rho: OutputDistribution,
                       ks: np.ndarray):
    """(log sum r*rho, log sum rho, log sum (1-r)*rho) over bins ks."""
    log_rho = rho.log_counts[ks]
    populated = np.isfinite(log_rho)
    missing = [int(k) for k, pop in zip(ks, populated)
               if pop and not r.present(int(k))]
    if missing:
        raise MissingPrecisionError(missing)
    log_rho = log_rho[populated]
    rv = r.r[ks][populated]
    if len(log_rho) == 0:
        raise UndefinedPrecisionError("no populated bins on the confident side")
    with np.errstate(divide="ignore"):
        log_tp_terms = log_rho + np.log(rv)
        log_fp_terms = log_rho + np.log1p(-rv)
    return (float(logsumexp(log_tp_terms)), float(logsumexp(log_rho)),
            float(logsumexp(log_fp_terms)))


def precision_at(lam: float, r: PrecisionPerBin, rho: OutputDistribution,
                 direction: Direction, window: Window | None = None) -> float:
    ks = included_bins(rho.grid, lam, direction, window)
    log_tp, log_denom, _ = _log_weighted_sums(r, rho, ks)
    return float(math.exp(log_tp - log_denom))


def recall_at(lam: float, r: PrecisionPerBin, rho: OutputDistribution,
              direction: Direction,
              window: Window | None = None) -> tuple[float, float]:
    """(unnormalized recall, window-normalized recall).

    The normalized value divides by the same weighted sum taken over the
    whole window, so it reaches 1.0 when lambda passes the window's far
    edge.  Without a window the full grid is the window.
    """
    ks = included_bins(rho.grid, lam, direction, window)
    log_tp, _, _ = _log_weighted_sums(r, rho, ks)
    if window is None:
        window = Window(rho.grid.z_min, rho.grid.z_max)
    k_lo, k_hi = window.bin_range(rho.grid)
    all_ks = np.arange(k_lo, k_hi + 1)
    log_tp_all, _, _ = _log_weighted_sums(r, rho, all_ks)
    unnorm = float(math.exp(log_tp))
    if log_tp_all == -math.inf:
        return unnorm, 0.0
    return unnorm, float(math.exp(log_tp - log_tp_all))


def pr_curve(r: PrecisionPerBin, rho: OutputDistribution,
             direction: Direction, window: Window) -> PRCurve:
    """One PR point per bin edge inside the window, confident end first."""
    k_lo, k_hi = window.bin_range(rho.grid)
    ks = range(k_lo, k_hi + 1)
    if direction is Direction.LOWER_IS_CONFIDENT:
        lams = [rho.grid.edge_lo(k) for k in ks]
    else:
        lams = [rho.grid.edge_lo(k) for k in reversed(list(ks))]
    points = []
    for lam in lams:
        try:
            prec = precision_at(lam, r, rho, direction, window)
        except UndefinedPrecisionError:
            continue
        unnorm, norm = recall_at(lam, r, rho, direction, window)
        log_unnorm = math.log(unnorm) if unnorm > 0 else -math.inf
        points.append(PRPoint(lam, unnorm, log_unnorm, norm, prec))
    return PRCurve(window, direction, points)


def aupr(curve: PRCurve) -> float:
    """Trapezoidal area of precision over window-normalized recall on [0,1].

    The curve is closed at recall 0 with its most-confident precision, so a
    constant-precision curve integrates to exactly that precision.
    """
    pts = sorted(curve.points, key=lambda p: p.recall_norm)
    if not pts:
        raise ValueError("empty PR curve")
    recalls = [0.0] + [p.recall_norm for p in pts]
    precisions = [pts[0].precision] + [p.precision for p in pts]
    return float(np.trapezoid(precisions, recalls))


def dominant_bin_precision(lam: float, r: PrecisionPerBin,
                           rho: OutputDistribution, direction: Direction,
                           window: Window | None = None) -> float:
    """r at the included bin holding the most mass.

    Valid approximation of the exact precision when rho differs by many
    nats between adjacent bins.  Ties break toward the less-confident bin.
    """
    ks = included_bins(rho.grid, lam, direction, window)
    log_rho = rho.log_counts[ks]
    populated = np.isfinite(log_rho)
    if not populated.any():
        raise UndefinedPrecisionError("no populated bins on the confident side")
    ks = ks[populated]
    log_rho = log_rho[populated]
    if direction is Direction.LOWER_IS_CONFIDENT:
        # ties toward higher (less confident) index: take the last argmax
        best = ks[len(log_rho) - 1 - int(np.argmax(log_rho[::-1]))]
    else:
        best = ks[int(np.argmax(log_rho))]
    if not r.present(int(best)):
        raise MissingPrecisionError([int(best)])
    return float(r.r[best])


def roc_unnormalized(r: PrecisionPerBin, rho: OutputDistribution,
                     direction: Direction,
                     window: Window) -> list[tuple[float, float, float]]:
    """(lambda, TP, FP) per bin edge; TP + FP equals cumulative rho exactly."""
    k_lo, k_hi = window.bin_range(rho.grid)
    ks = range(k_lo, k_hi + 1)
    if direction is Direction.LOWER_IS_CONFIDENT:
        lams = [rho.grid.edge_lo(k) for k in ks]
    else:
        lams = [rho.grid.edge_lo(k) for k in reversed(list(ks))]
    out = []
    for lam in lams:
        inc = included_bins(rho.grid, lam, direction, window)
        try:
            log_tp, _, log_fp = _log_weighted_sums(r, rho, inc)
        except UndefinedPrecisionError:
            continue
        out.append((lam, float(math.exp(log_tp)), float(math.exp(log_fp))))
    return out
