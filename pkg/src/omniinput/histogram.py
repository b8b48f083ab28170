"""Bin grids and log-space histograms of the output distribution.

Counts are stored as natural logs and combined with log-sum-exp: the
output distribution can span hundreds of nats between bins, so linear
counters are useless.  The entropy view S(z) = log rho(z) is only ever
meaningful up to an additive constant, hence the anchoring helper.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .space import InputSpace

__all__ = [
    "OutOfRangeError",
    "GridMismatchError",
    "EdgePolicy",
    "BinGrid",
    "NormalizationState",
    "OutputDistribution",
]

NEG_INF = -math.inf


class OutOfRangeError(ValueError):
    def __init__(self, z, grid):
        super().__init__(f"z={z} outside grid [{grid.z_min}, {grid.z_max})")
        self.z = z


class GridMismatchError(ValueError):
    pass


class EdgePolicy(enum.Enum):
    CLAMP_TO_EDGE_BINS = "clamp"
    REJECT = "reject"


@dataclass(frozen=True)
class BinGrid:
    """Uniform half-open bins [edge_k, edge_k + width) over [z_min, z_max).

    Edges are computed exactly as ``z_min + k * width`` rather than by
    accumulated addition, so ``bin_of`` never drifts.
    """

    z_min: float
    z_max: float
    width: float
    policy: EdgePolicy = EdgePolicy.CLAMP_TO_EDGE_BINS

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be > 0")
        if self.z_max <= self.z_min:
            raise ValueError("z_max must exceed z_min")

    @property
    def bin_count(self) -> int:
        return max(1, math.ceil((self.z_max - self.z_min) / self.width - 1e-12))

    def edge_lo(self, k: int) -> float:
        return self.z_min + k * self.width

    def edge_hi(self, k: int) -> float:
        return self.z_min + (k + 1) * self.width

    def midpoint(self, k: int) -> float:
        return self.z_min + (k + 0.5) * self.width

    def midpoints(self) -> np.ndarray:
        return self.z_min + (np.arange(self.bin_count) + 0.5) * self.width

    def bin_of(self, z: float) -> int:
        k = math.floor((z - self.z_min) / self.width)
        if k < 0 or k >= self.bin_count:
            if self.policy is EdgePolicy.REJECT:
                raise OutOfRangeError(z, self)
            k = min(max(k, 0), self.bin_count - 1)
        return k

    def to_dict(self) -> dict:
        return {"z_min": self.z_min, "z_max": self.z_max, "width": self.width,
                "policy": self.policy.value}

    @classmethod
    def from_dict(cls, d: dict) -> "BinGrid":
        return cls(d["z_min"], d["z_max"], d["width"], EdgePolicy(d["policy"]))


class NormalizationState(enum.Enum):
    RAW_VISITS = "raw_visits"
    RELATIVE_ENTROPY = "relative_entropy"
    NORMALIZED_TO_SPACE = "normalized_to_space"


def _logaddexp(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    return float(np.logaddexp(a, b))


@dataclass
class OutputDistribution:
    """Per-bin log counts (or log rho estimate) over a grid.

    ``log_counts[k]`` is -inf for bins never visited.  ``visits`` keeps the
    raw integer visit tallies alongside, for diagnostics and CSV export.
    """

    grid: BinGrid
    log_counts: np.ndarray
    normalization_state: NormalizationState = NormalizationState.RAW_VISITS
    visits: np.ndarray = field(default=None)

    def __post_init__(self):
        self.log_counts = np.asarray(self.log_counts, dtype=float)
        if len(self.log_counts) != self.grid.bin_count:
            raise GridMismatchError("log_counts length != bin_count")
        if self.visits is None:
            self.visits = np.zeros(self.grid.bin_count, dtype=np.int64)

    @classmethod
    def empty(cls, grid: BinGrid,
              state: NormalizationState = NormalizationState.RAW_VISITS):
        return cls(grid, np.full(grid.bin_count, NEG_INF), state)

    def record_visit(self, bin_index: int, weight: float = 1.0) -> None:
        if weight < 0:
            raise ValueError("weight must be >= 0")
        if weight == 0:
            return
        self.log_counts[bin_index] = _logaddexp(
            self.log_counts[bin_index], math.log(weight))
        self.visits[bin_index] += 1

    def record_z(self, z: float, weight: float = 1.0) -> None:
        self.record_visit(self.grid.bin_of(z), weight)

    def merge(self, other: "OutputDistribution") -> "OutputDistribution":
        """Additive combination; commutative and associative."""
        if other.grid != self.grid:
            raise GridMismatchError("cannot merge histograms on different grids")
        return OutputDistribution(
            self.grid,
            np.logaddexp(self.log_counts, other.log_counts),
            self.normalization_state,
            visits=self.visits + other.visits,
        )

    def log_total(self) -> float:
        finite = self.log_counts[np.isfinite(self.log_counts)]
        if len(finite) == 0:
            return NEG_INF
        from scipy.special import logsumexp
        return float(logsumexp(finite))

    def normalize_to_space(self, space: InputSpace) -> "OutputDistribution":
        """Shift log counts so sum(exp) equals the space's total size."""
        total = self.log_total()
        if total == NEG_INF:
            raise ValueError("cannot normalize an all-empty histogram")
        shift = math.log(space.total_size) - total
        return OutputDistribution(
            self.grid, self.log_counts + shift,
            NormalizationState.NORMALIZED_TO_SPACE, visits=self.visits.copy())

    def entropy_anchor(self, reference_bin: int) -> np.ndarray:
        """S(z) with S(reference) = 0; invariant under global shifts."""
        ref = self.log_counts[reference_bin]
        if not np.isfinite(ref):
            raise ValueError(f"reference bin {reference_bin} unvisited")
        return self.log_counts - ref

    # -- file format: CSV + JSON sidecar manifest --

    def write_csv(self, path: Path, manifest_extra: dict | None = None) -> None:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_lo", "bin_hi", "log_count", "visits"])
            for k in range(self.grid.bin_count):
                writer.writerow([
                    f"{self.grid.edge_lo(k):.10g}",
                    f"{self.grid.edge_hi(k):.10g}",
                    f"{self.log_counts[k]:.17g}",
                    int(self.visits[k]),
                ])
        manifest = {"grid": self.grid.to_dict(),
                    "normalization_state": self.normalization_state.value}
        if manifest_extra:
            manifest.update(manifest_extra)
        with open(path.with_suffix(path.suffix + ".manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2)

    @classmethod
    def read_csv(cls, path: Path) -> "OutputDistribution":
        path = Path(path)
        with open(path.with_suffix(path.suffix + ".manifest.json")) as fh:
            manifest = json.load(fh)
        grid = BinGrid.from_dict(manifest["grid"])
        log_counts = np.full(grid.bin_count, NEG_INF)
        visits = np.zeros(grid.bin_count, dtype=np.int64)
        with open(path, newline="") as fh:
            for k, row in enumerate(csv.DictReader(fh)):
                log_counts[k] = float(row["log_count"])
                visits[k] = int(row["visits"])
        return cls(grid, log_counts,
                   NormalizationState(manifest["normalization_state"]), visits)
