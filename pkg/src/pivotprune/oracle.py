"""Exhaustive baseline and the verifier that checks pruned results against it."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .index import PivotTable
from .metricspace import Dataset, DistanceSpec, Metric, Suffix
from .query import Match, Mode, PruneStats, QueryResult, RangeMode, Searcher

DISTANCE_ATOL = 1e-9


def _all_distances(data: Dataset, spec: DistanceSpec, q: Suffix, metric: Metric | None):
    metric = metric or Metric(spec, data)
    return metric.to_rows(metric.prepare(q))


def brute_force_range(data: Dataset, spec: DistanceSpec, q: Suffix, tau: float,
                      metric: Metric | None = None) -> QueryResult:
    d = _all_distances(data, spec, q, metric)
    ids = data.ids
    matches = sorted((Match(ids[i], dist) for i, dist in enumerate(d.tolist()) if dist <= tau),
                     key=Match.sort_key)
    return QueryResult(q.id, tuple(matches), PruneStats(len(data), 0, 0, len(data), 0))


def brute_force_knn(data: Dataset, spec: DistanceSpec, q: Suffix, k: int,
                    metric: Metric | None = None) -> QueryResult:
    if not 1 <= k <= len(data):
        raise ValueError(f"k must be in [1, {len(data)}], got {k}")
    d = _all_distances(data, spec, q, metric)
    ids = data.ids
    ranked = sorted(zip(d.tolist(), ids))[:k]
    matches = tuple(Match(i, dist) for dist, i in ranked)
    return QueryResult(q.id, matches, PruneStats(len(data), 0, 0, len(data), 0))


@dataclass
class VerificationReport:
    queries_checked: int = 0
    mismatches: list[tuple[str, str]] = field(default_factory=list)
    evaluations_baseline: int = 0
    evaluations_pruned: int = 0

    @property
    def accuracy(self) -> float:
        if self.queries_checked == 0:
            return 1.0
        bad = len({qid for qid, _ in self.mismatches})
        return (self.queries_checked - bad) / self.queries_checked

    @property
    def evaluation_ratio(self) -> float:
        if self.evaluations_baseline == 0:
            return 0.0
        return self.evaluations_pruned / self.evaluations_baseline

    def to_dict(self) -> dict:
        return {
            "queries_checked": self.queries_checked,
            "accuracy": self.accuracy,
            "evaluations_baseline": self.evaluations_baseline,
            "evaluations_pruned": self.evaluations_pruned,
            "evaluation_ratio": self.evaluation_ratio,
            "mismatches": [{"query_id": q, "description": d} for q, d in self.mismatches],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _fmt(m: Match | None) -> str:
    if m is None:
        return "<none>"
    if m.exact:
        return f"{m.suffix_id}@{m.distance!r}"
    return f"{m.suffix_id}@[{m.lower!r},{m.upper!r}]"


def compare_results(pruned: QueryResult, baseline: QueryResult,
                    atol: float = DISTANCE_ATOL) -> str | None:
    """Describe the first divergence between two results, or None if they agree.

    Interval matches (accepted without an exact distance) are checked for
    membership and containment only, since their rank is not defined.
    """
    if any(not m.exact for m in pruned.matches):
        got = {m.suffix_id: m for m in pruned.matches}
        want = {m.suffix_id: m for m in baseline.matches}
        if got.keys() != want.keys():
            extra = sorted(got.keys() - want.keys())[:3]
            missing = sorted(want.keys() - got.keys())[:3]
            return f"membership differs: extra={extra} missing={missing}"
        for sid, m in got.items():
            d = want[sid].distance
            if m.exact and abs(m.distance - d) > atol:
                return f"distance differs for {sid}: {_fmt(m)} vs {d!r}"
            if not m.exact and not (m.lower - atol <= d <= m.upper + atol):
                return f"baseline distance {d!r} for {sid} outside interval {_fmt(m)}"
        return None

    n = max(len(pruned.matches), len(baseline.matches))
    for rank in range(n):
        a = pruned.matches[rank] if rank < len(pruned.matches) else None
        b = baseline.matches[rank] if rank < len(baseline.matches) else None
        if a is None or b is None or a.suffix_id != b.suffix_id or abs(a.distance - b.distance) > atol:
            return f"first divergence at rank {rank}: pruned {_fmt(a)} vs baseline {_fmt(b)}"
    return None


def verify(table: PivotTable, data: Dataset, queries: Sequence[Suffix], mode: Mode,
           workers: int = 1, metric: Metric | None = None) -> VerificationReport:
    """Run the pruned engine and the exhaustive baseline on every query and
    compare membership, ordering and distances."""
    searcher = Searcher(table, data, metric)
    spec = table.distance_spec

    def check(q: Suffix):
        pruned = baseline = None
        err_p = err_b = None
        try:
            pruned = searcher.run(q, mode)
        except Exception as exc:
            err_p = exc
        try:
            if isinstance(mode, RangeMode):
                baseline = brute_force_range(data, spec, q, mode.tau, searcher.metric)
            else:
                baseline = brute_force_knn(data, spec, q, mode.k, searcher.metric)
        except Exception as exc:
            err_b = exc
        if err_p is not None or err_b is not None:
            if err_p is not None and err_b is not None:
                raise err_p
            which = "pruned" if err_p is not None else "baseline"
            return pruned, baseline, f"only the {which} engine failed: {err_p or err_b}"
        return pruned, baseline, compare_results(pruned, baseline)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            outcomes = list(pool.map(check, queries))
    else:
        outcomes = [check(q) for q in queries]

    report = VerificationReport()
    for q, (pruned, baseline, problem) in zip(queries, outcomes):
        report.queries_checked += 1
        if pruned is not None:
            report.evaluations_pruned += pruned.stats.evaluations
        if baseline is not None:
            report.evaluations_baseline += baseline.stats.evaluations
        if problem is not None:
            report.mismatches.append((q.id, problem))
    return report


def corrupt_cell(table: PivotTable, row: int, col: int, amount: float | None = None) -> PivotTable:
    """Copy of ``table`` with one cell inflated (default: 10x coverage radius,
    or 10.0 when the radius is zero).

    For fault-injection tests of the verifier.
    """
    if amount is None:
        radius = table.pivots.coverage_radius
        amount = 10.0 * radius if radius > 0 else 10.0
    m = np.array(table.matrix)
    m[row, col] += amount
    return table.with_matrix(m)
