"""Per-bin reservoirs of representative sampled inputs.

Each bin keeps at most ``capacity`` distinct sequences (deduplicated by
canonical hash).  Once full, the standard reservoir rule replaces a random
slot with probability capacity/seen, so retained items are a uniform
subsample of the distinct sequences ever offered to that bin.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .space import canonical_hash

__all__ = ["ReservoirItem", "BinReservoir"]


@dataclass
class ReservoirItem:
    tokens: np.ndarray
    z: float
    hash: int
    temperature: float | None = None
    weight: float = 1.0


@dataclass
class BinReservoir:
    capacity: int = 30
    bins: dict[int, list[ReservoirItem]] = field(default_factory=dict)
    seen: dict[int, int] = field(default_factory=dict)
    _hashes: dict[int, set[int]] = field(default_factory=dict)

    def offer(self, bin_index: int, seq: np.ndarray, z: float,
              rng: np.random.Generator, temperature: float | None = None) -> bool:
        """Offer one sequence; returns True if it was retained.

        Duplicate hashes within a bin are ignored and do not advance the
        seen-count, so the uniformity guarantee is over distinct items.
        """
        h = canonical_hash(seq)
        hashes = self._hashes.setdefault(bin_index, set())
        if h in hashes:
            return False
        items = self.bins.setdefault(bin_index, [])
        n_seen = self.seen.get(bin_index, 0) + 1
        self.seen[bin_index] = n_seen
        item = ReservoirItem(np.asarray(seq).copy(), float(z), h, temperature)
        if len(items) < self.capacity:
            hashes.add(h)
            items.append(item)
            return True
        slot = int(rng.integers(0, n_seen))
        if slot < self.capacity:
            hashes.discard(items[slot].hash)
            hashes.add(h)
            items[slot] = item
            return True
        return False

    def size(self, bin_index: int) -> int:
        return len(self.bins.get(bin_index, []))

    def bin_indices(self) -> list[int]:
        return sorted(self.bins)

    def merge(self, other: "BinReservoir", rng: np.random.Generator) -> None:
        """Fold another reservoir's items in (used at thread barriers)."""
        for b, items in other.bins.items():
            for item in items:
                self.offer(b, item.tokens, item.z, rng, item.temperature)

    def write_jsonl(self, path: Path) -> None:
        with open(path, "w") as fh:
            for b in self.bin_indices():
                for item in self.bins[b]:
                    fh.write(json.dumps({
                        "tokens": item.tokens.tolist(),
                        "z": item.z,
                        "bin": b,
                        "temperature": item.temperature,
                        "hash": f"{item.hash:016x}",
                    }) + "\n")

    @classmethod
    def read_jsonl(cls, path: Path, capacity: int = 30) -> "BinReservoir":
        res = cls(capacity=capacity)
        with open(path) as fh:
            for line in fh:
                rec = json.loads(line)
                b = rec["bin"]
                item = ReservoirItem(np.asarray(rec["tokens"], dtype=np.int64),
                                     rec["z"], int(rec["hash"], 16),
                                     rec.get("temperature"))
                res.bins.setdefault(b, []).append(item)
                res._hashes.setdefault(b, set()).add(item.hash)
                res.seen[b] = res.seen.get(b, 0) + 1
        return res
