"""Pivot selection: greedy farthest-point approximation of k-center."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import DatasetError
from .metricspace import Dataset, DistanceSpec, Metric


@dataclass(frozen=True)
class PivotSet:
    pivot_indices: tuple[int, ...]
    coverage_radius: float
    distance_spec: DistanceSpec

    def __post_init__(self):
        object.__setattr__(self, "pivot_indices", tuple(int(i) for i in self.pivot_indices))
        if not self.pivot_indices:
            raise ValueError("a pivot set needs at least one pivot")
        if len(set(self.pivot_indices)) != len(self.pivot_indices):
            raise ValueError("pivot indices must be distinct")
        if min(self.pivot_indices) < 0:
            raise ValueError("pivot indices must be non-negative")
        if not self.coverage_radius >= 0:
            raise ValueError("coverage radius must be non-negative")

    def __len__(self) -> int:
        return len(self.pivot_indices)

    def prefix(self, k: int, data: Dataset) -> PivotSet:
        """The first k pivots, with the radius recomputed for that prefix."""
        idx = self.pivot_indices[:k]
        return PivotSet(idx, coverage_radius(data, self.distance_spec, idx), self.distance_spec)


def default_k(n: int) -> int:
    return max(1, min(32, math.ceil(math.sqrt(n))))


def greedy_farthest_point(
    data: Dataset,
    spec: DistanceSpec,
    k: int | None = None,
    seed_index: int = 0,
    metric: Metric | None = None,
) -> PivotSet:
    """Pick k pivots, each the row farthest from those already chosen.

    Starts at ``seed_index``; ties go to the smallest row index. Costs exactly
    ``len(data) * k`` distance evaluations.
    """
    n = len(data)
    if n == 0:
        raise DatasetError("cannot select pivots from an empty dataset")
    if k is None:
        k = default_k(n)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if not 0 <= seed_index < n:
        raise IndexError(f"seed_index {seed_index} out of range for {n} rows")
    metric = metric or Metric(spec, data)

    chosen = [seed_index]
    nearest = metric.to_rows(metric.row_repr(seed_index))
    while len(chosen) < k:
        candidates = nearest.copy()
        candidates[chosen] = -np.inf  # keeps indices distinct when duplicates exist
        nxt = int(np.argmax(candidates))
        chosen.append(nxt)
        np.minimum(nearest, metric.to_rows(metric.row_repr(nxt)), out=nearest)
    return PivotSet(tuple(chosen), float(nearest.max()), spec)


def coverage_radius(data: Dataset, spec: DistanceSpec, pivots: Sequence[int],
                    metric: Metric | None = None) -> float:
    """Largest distance from any row to its nearest pivot."""
    if len(pivots) == 0:
        raise ValueError("pivot list is empty")
    n = len(data)
    for p in pivots:
        if not 0 <= p < n:
            raise IndexError(f"pivot index {p} out of range for {n} rows")
    metric = metric or Metric(spec, data)
    nearest = np.full(n, np.inf)
    for p in pivots:
        np.minimum(nearest, metric.to_rows(metric.row_repr(p)), out=nearest)
    return float(nearest.max())


def brute_force_k_center(data: Dataset, spec: DistanceSpec, k: int,
                         max_n: int = 15, max_k: int = 3) -> PivotSet:
    """Exact k-center optimum by enumerating every k-subset (tiny inputs only).

    Ties on the radius go to the lexicographically smallest index tuple.
    """
    n = len(data)
    if n == 0:
        raise DatasetError("empty dataset")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if n > max_n or k > max_k:
        raise ValueError(f"instance too large for enumeration (n={n} > {max_n} or k={k} > {max_k})")
    metric = Metric(spec, data)
    D = np.vstack([metric.to_rows(metric.row_repr(i)) for i in range(n)])
    best, best_r = None, math.inf
    for combo in combinations(range(n), k):
        r = float(D[list(combo)].min(axis=0).max())
        if r < best_r:
            best, best_r = combo, r
    return PivotSet(best, best_r, spec)


def save_pivots(pivots: PivotSet, data: Dataset, path) -> None:
    doc = {
        "format": "pivotprune-pivots",
        "distance": pivots.distance_spec.kind,
        "pivot_indices": list(pivots.pivot_indices),
        "pivot_ids": [data[i].id for i in pivots.pivot_indices],
        "coverage_radius": pivots.coverage_radius,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_pivots(path, data: Dataset) -> PivotSet:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "pivotprune-pivots":
        raise ValueError(f"{path}: not a pivot file")
    idx = doc["pivot_indices"]
    if [data[i].id if i < len(data) else None for i in idx] != doc["pivot_ids"]:
        raise DatasetError(f"{path}: pivot ids do not match this dataset")
    return PivotSet(tuple(idx), float(doc["coverage_radius"]), DistanceSpec(doc["distance"]))
