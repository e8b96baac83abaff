"""Triangle-inequality bounds from pivot distances, and the prune/accept rule.

For a query row q and a dataset row y (distances to the same K pivots)::

    max_k |q[k] - y[k]|  <=  d(q, y)  <=  min_k (q[k] + y[k])

Range membership is inclusive (d <= tau), so a row is pruned only when the
lower bound strictly exceeds tau and accepted when the upper bound is <= tau.
No epsilon is applied; user-supplied metrics with large rounding error
should keep that in mind.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .index import PivotTable
from .metricspace import Metric, Suffix


class Decision(enum.IntEnum):
    PRUNE = 0
    ACCEPT = 1
    COMPUTE = 2


@dataclass(frozen=True)
class BoundPair:
    lower: float
    upper: float


def query_pivot_row(table: PivotTable, q: Suffix, metric: Metric) -> np.ndarray:
    """Distances from q to each pivot (K evaluations)."""
    return metric.to_rows(metric.prepare(q), np.asarray(table.pivots.pivot_indices))


def bound_pair(q_row, y_row) -> BoundPair:
    q_row = np.asarray(q_row, dtype=np.float64)
    y_row = np.asarray(y_row, dtype=np.float64)
    if q_row.shape != y_row.shape or q_row.ndim != 1:
        raise ValueError(f"pivot rows differ in shape: {q_row.shape} vs {y_row.shape}")
    if q_row.shape[0] == 0:
        raise ValueError("bounds need at least one pivot")
    return BoundPair(float(np.max(np.abs(q_row - y_row))), float(np.min(q_row + y_row)))


def bounds_all(q_row: np.ndarray, matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper bounds for every table row at once."""
    lower = np.max(np.abs(matrix - q_row), axis=1)
    upper = np.min(matrix + q_row, axis=1)
    return lower, upper


def decide(bounds: BoundPair, tau: float) -> Decision:
    if bounds.lower > tau:
        return Decision.PRUNE
    if bounds.upper <= tau:
        return Decision.ACCEPT
    return Decision.COMPUTE


def decide_all(lower: np.ndarray, upper: np.ndarray, tau: float) -> np.ndarray:
    """Vectorized decide(); same precedence (PRUNE before ACCEPT)."""
    out = np.full(lower.shape, Decision.COMPUTE, dtype=np.int8)
    out[upper <= tau] = Decision.ACCEPT
    out[lower > tau] = Decision.PRUNE
    return out
