"""Annotation task store: persisting sampled inputs, collecting scores,
and merging them into per-bin precision.

Storage is append-only JSONL (tasks.jsonl + annotations.jsonl in a run
directory): auditability of human labels outranks query speed at this
scale.  Resubmission by the same annotator overwrites on read (last record
wins), so the files never need in-place edits.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evaluator import PrecisionPerBin
from .histogram import BinGrid
from .models import OracleAnnotator
from .reservoir import BinReservoir

__all__ = [
    "AnnotationTask",
    "AnnotationRecord",
    "BinAnnotationSummary",
    "AnnotationStore",
    "UnknownTaskError",
]


@dataclass
class AnnotationTask:
    task_id: str
    run_id: str
    bin: int
    tokens: list[int]
    z: float
    display: str | None = None

    def to_dict(self) -> dict:
        return {"task_id": self.task_id, "run_id": self.run_id,
                "bin": self.bin, "tokens": self.tokens, "z": self.z,
                "display": self.display}


@dataclass
class AnnotationRecord:
    task_id: str
    annotator_id: str
    score: float
    ts: str

    def to_dict(self) -> dict:
        return {"task_id": self.task_id, "annotator_id": self.annotator_id,
                "score": self.score, "ts": self.ts}


@dataclass
class BinAnnotationSummary:
    bin: int
    mean: float
    std: float | None   # spread of per-annotator bin means; None if < 2
    n_tasks: int
    n_records: int


class UnknownTaskError(KeyError):
    pass


class AnnotationStore:
    """Single-writer task/record store rooted at a directory."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.tasks: dict[str, AnnotationTask] = {}
        # (task_id, annotator_id) -> record; last submission wins
        self.records: dict[tuple[str, str], AnnotationRecord] = {}
        self.quotas: dict[str, int] = {}
        self._load()

    @property
    def tasks_path(self) -> Path:
        return self.root / "tasks.jsonl"

    @property
    def records_path(self) -> Path:
        return self.root / "annotations.jsonl"

    def _load(self) -> None:
        if self.tasks_path.exists():
            with open(self.tasks_path) as fh:
                for line in fh:
                    rec = json.loads(line)
                    if "quota" in rec:
                        self.quotas[rec["run_id"]] = rec["quota"]
                        continue
                    task = AnnotationTask(**rec)
                    self.tasks[task.task_id] = task
        if self.records_path.exists():
            with open(self.records_path) as fh:
                for line in fh:
                    rec = AnnotationRecord(**json.loads(line))
                    self.records[(rec.task_id, rec.annotator_id)] = rec

    def _append(self, path: Path, payload: dict) -> None:
        with open(path, "a") as fh:
            fh.write(json.dumps(payload) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    # -- task creation -------------------------------------------------

    def create_tasks(self, run_id: str, reservoir: BinReservoir,
                     per_bin_quota: int = 30):
        """Up to quota tasks per bin from the reservoir; one task per
        (run, bin, hash).  Returns (new tasks, underfilled bin list)."""
        created = []
        underfilled = []
        self.quotas[run_id] = per_bin_quota
        self._append(self.tasks_path, {"run_id": run_id,
                                       "quota": per_bin_quota})
        for b in reservoir.bin_indices():
            items = reservoir.bins[b][:per_bin_quota]
            if len(items) < per_bin_quota:
                underfilled.append(b)
            for item in items:
                task_id = f"{run_id}:{b}:{item.hash:016x}"
                if task_id in self.tasks:
                    continue
                task = AnnotationTask(task_id, run_id, b,
                                      [int(t) for t in item.tokens],
                                      float(item.z))
                self.tasks[task_id] = task
                self._append(self.tasks_path, task.to_dict())
                created.append(task)
        return created, underfilled

    # -- submission ----------------------------------------------------

    def submit(self, task_id: str, annotator_id: str,
               score: float) -> AnnotationRecord:
        if task_id not in self.tasks:
            raise UnknownTaskError(task_id)
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"score {score} outside [0, 1]")
        rec = AnnotationRecord(
            task_id, annotator_id, float(score),
            _dt.datetime.now(_dt.timezone.utc).isoformat())
        self._append(self.records_path, rec.to_dict())
        self.records[(task_id, annotator_id)] = rec
        return rec

    def auto_annotate(self, run_id: str, oracle: OracleAnnotator) -> int:
        """Score every task of the run not yet seen by this oracle.

        Idempotent: reruns add no records."""
        oracle_id = f"oracle:{oracle.name}"
        n = 0
        for task in self.run_tasks(run_id):
            if (task.task_id, oracle_id) in self.records:
                continue
            self.submit(task.task_id, oracle_id,
                        oracle.annotate(np.asarray(task.tokens)))
            n += 1
        return n

    # -- queries -------------------------------------------------------

    def run_ids(self) -> list[str]:
        return sorted({t.run_id for t in self.tasks.values()})

    def run_tasks(self, run_id: str) -> list[AnnotationTask]:
        return sorted((t for t in self.tasks.values() if t.run_id == run_id),
                      key=lambda t: (t.bin, t.task_id))

    def records_for(self, task_id: str) -> list[AnnotationRecord]:
        return [r for (tid, _), r in sorted(self.records.items())
                if tid == task_id]

    def is_done(self, task_id: str) -> bool:
        return any(tid == task_id for tid, _ in self.records)

    def next_pending(self, run_id: str,
                     annotator_id: str) -> AnnotationTask | None:
        """Lowest-bin task this annotator has not scored yet, preferring
        tasks nobody has scored at all."""
        candidates = [t for t in self.run_tasks(run_id)
                      if (t.task_id, annotator_id) not in self.records]
        if not candidates:
            return None
        fresh = [t for t in candidates if not self.is_done(t.task_id)]
        return (fresh or candidates)[0]

    def progress(self, run_id: str) -> dict[int, dict]:
        out: dict[int, dict] = {}
        quota = self.quotas.get(run_id, 30)
        for task in self.run_tasks(run_id):
            slot = out.setdefault(task.bin, {"done": 0, "total": 0,
                                             "quota": quota})
            slot["total"] += 1
            if self.is_done(task.task_id):
                slot["done"] += 1
        return out

    # -- merging -------------------------------------------------------

    def merge_to_precision(self, run_id: str, grid: BinGrid):
        """(PrecisionPerBin, per-bin variance array).

        Two-level mean: each task's score is the mean across its
        annotators, each bin's r is the mean across its scored tasks.  The
        variance column is the sample standard deviation across
        per-annotator bin means (NaN below two annotators).
        """
        by_bin_scores: dict[int, list[float]] = {}
        by_bin_annotator: dict[int, dict[str, list[float]]] = {}
        support = np.zeros(grid.bin_count, dtype=np.int64)
        for task in self.run_tasks(run_id):
            recs = self.records_for(task.task_id)
            if not recs:
                continue
            task_score = float(np.mean([r.score for r in recs]))
            by_bin_scores.setdefault(task.bin, []).append(task_score)
            for r in recs:
                by_bin_annotator.setdefault(task.bin, {}).setdefault(
                    r.annotator_id, []).append(r.score)
            support[task.bin] += 1
        r = np.full(grid.bin_count, np.nan)
        var = np.full(grid.bin_count, np.nan)
        for b, scores in by_bin_scores.items():
            r[b] = float(np.mean(scores))
            ann_means = [np.mean(v) for v in by_bin_annotator[b].values()]
            if len(ann_means) >= 2:
                var[b] = float(np.std(ann_means, ddof=1))
        return PrecisionPerBin(grid, r, support=support), var

    def summaries(self, run_id: str, grid: BinGrid) -> list[BinAnnotationSummary]:
        precision, var = self.merge_to_precision(run_id, grid)
        out = []
        for b in range(grid.bin_count):
            if precision.support[b] == 0:
                continue
            n_records = sum(1 for (tid, _) in self.records
                            if self.tasks[tid].run_id == run_id
                            and self.tasks[tid].bin == b)
            out.append(BinAnnotationSummary(
                b, float(precision.r[b]),
                None if np.isnan(var[b]) else float(var[b]),
                int(precision.support[b]), n_records))
        return out

    # -- export / import ----------------------------------------------

    def export_records(self, path: Path) -> None:
        """Canonically sorted JSONL of the latest record per (task, annotator)."""
        recs = sorted(self.records.values(),
                      key=lambda r: (r.task_id, r.annotator_id))
        with open(path, "w") as fh:
            for r in recs:
                fh.write(json.dumps(r.to_dict()) + "\n")

    def import_records(self, path: Path) -> int:
        n = 0
        with open(path) as fh:
            for line in fh:
                rec = AnnotationRecord(**json.loads(line))
                if rec.task_id not in self.tasks:
                    raise UnknownTaskError(rec.task_id)
                self._append(self.records_path, rec.to_dict())
                self.records[(rec.task_id, rec.annotator_id)] = rec
                n += 1
        return n
