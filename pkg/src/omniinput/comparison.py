"""Cross-model normalization via a shared window and overlap subspace.

Two models' sampled output distributions carry arbitrary, incompatible
normalizations.  Scoring each model's in-window samples under the *other*
model identifies the overlap subspace (inputs both models map into the
window); the ratio n_M / X_M then rescales each distribution onto the
shared yardstick, making recall axes commensurable.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evaluator import PRCurve, Window
from .models import EnergyModel
from .space import canonical_hash

__all__ = [
    "ZeroOverlapError",
    "ModelOverlap",
    "OverlapReport",
    "overlap_count",
    "build_overlap_report",
    "normalized_scales",
    "overlay_pr",
]


class ZeroOverlapError(ValueError):
    pass


@dataclass
class ModelOverlap:
    model_id: str
    n: int          # deduplicated in-window samples from this model
    x: int          # of those, also in-window under the other model

    @property
    def rho_hat(self) -> float:
        if self.x == 0:
            raise ZeroOverlapError(
                f"{self.model_id}: no overlap samples; widen the window")
        return self.n / self.x

    @property
    def binomial_se(self) -> float:
        """Standard error of x/n under the binomial sampling model."""
        p = self.x / self.n if self.n else 0.0
        return math.sqrt(p * (1 - p) / self.n) if self.n else math.nan


@dataclass
class OverlapReport:
    window: Window
    first: ModelOverlap
    second: ModelOverlap

    def to_dict(self) -> dict:
        ratio = self.first.rho_hat / self.second.rho_hat
        return {
            "window": [self.window.z_lo, self.window.z_hi],
            "models": [
                {"id": m.model_id, "n": m.n, "x": m.x, "rho_hat": m.rho_hat,
                 "overlap_fraction_se": m.binomial_se}
                for m in (self.first, self.second)
            ],
            "ratio": ratio,
        }


def _dedup_in_window(samples, window: Window):
    seen = set()
    out = []
    for tokens, z in samples:
        if not window.contains(z):
            continue
        h = canonical_hash(tokens)
        if h in seen:
            continue
        seen.add(h)
        out.append((np.asarray(tokens), z))
    return out


def overlap_count(samples, window: Window, other_model: EnergyModel) -> int:
    """Count deduplicated in-window samples also in-window under the other model."""
    kept = _dedup_in_window(samples, window)
    zs = other_model.score_batch(np.array([t for t, _ in kept])) if kept else []
    return int(sum(window.contains(float(z)) for z in zs))


def build_overlap_report(samples_1, model_1: EnergyModel,
                         samples_2, model_2: EnergyModel,
                         window: Window) -> OverlapReport:
    kept_1 = _dedup_in_window(samples_1, window)
    kept_2 = _dedup_in_window(samples_2, window)
    x_1 = overlap_count(kept_1, window, model_2)
    x_2 = overlap_count(kept_2, window, model_1)
    return OverlapReport(
        window,
        ModelOverlap(model_1.name, len(kept_1), x_1),
        ModelOverlap(model_2.name, len(kept_2), x_2),
    )


def normalized_scales(report: OverlapReport) -> tuple[float, float, float]:
    """(rho_hat_1, rho_hat_2, ratio).

    The ratio estimates (#inputs model 1 maps into the window) /
    (#inputs model 2 maps into the window); swapping the models inverts it
    exactly.
    """
    r1 = report.first.rho_hat
    r2 = report.second.rho_hat
    return r1, r2, r1 / r2


@dataclass
class OverlaidCurves:
    window: Window
    model_ids: list[str]
    # per model: list of (lambda, scaled_recall, common_recall_norm, precision)
    tables: list[list[tuple[float, float, float, float]]]
    auprs: list[float]

    def write_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model", "lambda", "scaled_recall",
                             "recall_norm_common", "precision"])
            for mid, table in zip(self.model_ids, self.tables):
                for lam, sr, rn, p in table:
                    writer.writerow([mid, f"{lam:.10g}", f"{sr:.17g}",
                                     f"{rn:.17g}", f"{p:.17g}"])

    def write_json(self, path: Path) -> None:
        with open(path, "w") as fh:
            json.dump({
                "window": [self.window.z_lo, self.window.z_hi],
                "models": self.model_ids,
                "auprs": self.auprs,
                "curves": [[list(row) for row in table]
                           for table in self.tables],
            }, fh, indent=2)


def overlay_pr(curves: list[tuple[str, PRCurve]],
               report: OverlapReport | None = None) -> OverlaidCurves:
    """Put PR curves from different models on one commensurable recall axis.

    Each model's unnormalized recall is divided by its rho_hat; the common
    normalization then divides all scaled recalls by the largest scaled
    recall across models, so the axis spans [0, 1].
    """
    if report is not None:
        windows = {report.window} | {c.window for _, c in curves}
        if len(windows) != 1:
            raise ValueError("curves and report must share one window")
        scales = {report.first.model_id: report.first.rho_hat,
                  report.second.model_id: report.second.rho_hat}
    else:
        if len({c.window for _, c in curves}) != 1:
            raise ValueError("curves must share one window")
        scales = {}
    window = curves[0][1].window

    scaled = []
    for model_id, curve in curves:
        s = scales.get(model_id, 1.0)
        scaled.append([(p.lam, p.recall_unnorm / s, p.precision)
                       for p in curve.points])
    max_recall = max((sr for table in scaled for _, sr, _ in table),
                     default=0.0)
    if max_recall <= 0:
        raise ValueError("no recall mass in any curve")

    tables = []
    auprs = []
    for table in scaled:
        rows = [(lam, sr, sr / max_recall, p) for lam, sr, p in table]
        tables.append(rows)
        pts = sorted(rows, key=lambda r: r[2])
        xs = [0.0] + [r[2] for r in pts]
        ys = [pts[0][3]] + [r[3] for r in pts]
        auprs.append(float(np.trapezoid(ys, xs)))
    return OverlaidCurves(window, [mid for mid, _ in curves], tables, auprs)
