"""Exact range and k-NN retrieval over a pivot table.

Results are always identical to exhaustive comparison; the bounds only
decide which exact distances can be skipped.
"""

from __future__ import annotations

import heapq
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from functools import cached_property
from typing import Callable, Iterable, Sequence, TextIO, Union

import numpy as np

from .bounds import Decision, bounds_all, decide_all
from .errors import PivotPruneError, SpecMismatchError
from .index import PivotTable
from .metricspace import Dataset, Metric, Suffix

DEFAULT_BATCH_SIZE = 500


@dataclass(frozen=True)
class PruneStats:
    candidates: int = 0
    pruned_lb: int = 0
    accepted_ub: int = 0
    computed: int = 0
    pivot_evals: int = 0

    def __add__(self, other: PruneStats) -> PruneStats:
        return PruneStats(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    @property
    def evaluations(self) -> int:
        """All exact distance evaluations, pivot rows included."""
        return self.computed + self.pivot_evals

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Match:
    """A retrieved suffix.

    ``distance`` is None when the row was accepted from its upper bound alone
    (membership-only range queries); ``lower``/``upper`` then bracket it.
    """

    suffix_id: str
    distance: float | None
    lower: float | None = None
    upper: float | None = None

    @property
    def exact(self) -> bool:
        return self.distance is not None

    def sort_key(self):
        return (self.distance if self.distance is not None else self.lower, self.suffix_id)

    def to_json(self) -> list:
        if self.distance is not None:
            return [self.suffix_id, self.distance]
        return [self.suffix_id, [self.lower, self.upper]]


@dataclass(frozen=True)
class QueryResult:
    query_id: str
    matches: tuple[Match, ...]
    stats: PruneStats

    @property
    def ids(self) -> list[str]:
        return [m.suffix_id for m in self.matches]

    def to_record(self) -> dict:
        return {
            "query_id": self.query_id,
            "matches": [m.to_json() for m in self.matches],
            "stats": self.stats.to_dict(),
        }


@dataclass(frozen=True)
class RangeMode:
    tau: float
    exact_distances: bool = False

    def __post_init__(self):
        if not self.tau >= 0:
            raise ValueError(f"tau must be non-negative, got {self.tau}")


@dataclass(frozen=True)
class KnnMode:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be positive, got {self.k}")


Mode = Union[RangeMode, KnnMode]


class Searcher:
    """Shared read-only state for queries against one table.

    The module-level functions build one per call; batch runs share one.
    """

    def __init__(self, table: PivotTable, data: Dataset, metric: Metric | None = None):
        if table.n != len(data):
            raise SpecMismatchError(f"table has {table.n} rows but dataset has {len(data)}")
        if metric is None:
            metric = Metric(table.distance_spec, data)
        elif metric.spec != table.distance_spec or metric.data is not data:
            raise SpecMismatchError("metric does not match the table's distance or dataset")
        self.table = table
        self.data = data
        self.metric = metric
        self._pivot_rows = np.asarray(table.pivots.pivot_indices, dtype=np.int64)

    @cached_property
    def id_rank(self) -> np.ndarray:
        """Position of each row's id in ascending id order (tie-break key)."""
        order = sorted(range(len(self.data)), key=self.data.ids.__getitem__)
        rank = np.empty(len(order), dtype=np.int64)
        rank[order] = np.arange(len(order))
        return rank

    def _pivot_alias(self, qrep: np.ndarray) -> int | None:
        # A query identical to a pivot reads exact distances off that column.
        for col, row in enumerate(self._pivot_rows.tolist()):
            if self.metric.same_point(qrep, row):
                return col
        return None

    def _prepare(self, q: Suffix):
        qrep = self.metric.prepare(q)
        q_row = self.metric.to_rows(qrep, self._pivot_rows)
        return qrep, q_row

    def range(self, q: Suffix, tau: float, exact_distances: bool = False) -> QueryResult:
        if not tau >= 0:
            raise ValueError(f"tau must be non-negative, got {tau}")
        T = self.table.matrix
        n = T.shape[0]
        qrep, q_row = self._prepare(q)
        lower, upper = bounds_all(q_row, T)
        decision = decide_all(lower, upper, tau)

        compute = np.flatnonzero(decision == Decision.COMPUTE)
        accept = np.flatnonzero(decision == Decision.ACCEPT)
        alias = self._pivot_alias(qrep) if exact_distances else None

        computed = 0
        if compute.size:
            d_compute = self.metric.to_rows(qrep, compute)
            computed += compute.size
        else:
            d_compute = np.empty(0)

        ids = self.data.ids
        matches = [Match(ids[r], d) for r, d in zip(compute.tolist(), d_compute.tolist()) if d <= tau]
        if exact_distances and accept.size:
            if alias is not None:
                d_accept = T[accept, alias]
            else:
                d_accept = self.metric.to_rows(qrep, accept)
                computed += accept.size
            matches.extend(Match(ids[r], d) for r, d in zip(accept.tolist(), d_accept.tolist()))
        else:
            matches.extend(Match(ids[r], None, lo, up) for r, lo, up in
                           zip(accept.tolist(), lower[accept].tolist(), upper[accept].tolist()))
        matches.sort(key=Match.sort_key)

        stats = PruneStats(
            candidates=n,
            pruned_lb=int(np.count_nonzero(decision == Decision.PRUNE)),
            accepted_ub=int(accept.size),
            computed=computed,
            pivot_evals=len(self._pivot_rows),
        )
        return QueryResult(q.id, tuple(matches), stats)

    def knn(self, q: Suffix, k: int) -> QueryResult:
        """Pivot-table k-NN: scan rows by ascending lower bound, stop when it
        exceeds the current k-th best distance.

        The search radius starts at the k-th smallest upper bound, which is
        always attainable. Ties at equal distance go to the smaller suffix id.
        """
        T = self.table.matrix
        n = T.shape[0]
        if not 1 <= k <= n:
            raise ValueError(f"k must be in [1, {n}], got {k}")
        qrep, q_row = self._prepare(q)
        rank = self.id_rank
        ids = self.data.ids
        n_pivots = len(self._pivot_rows)

        alias = self._pivot_alias(qrep)
        if alias is not None:
            d = T[:, alias]
            top = np.lexsort((rank, d))[:k]
            matches = tuple(Match(ids[r], float(d[r])) for r in top.tolist())
            stats = PruneStats(n, n - k, k, 0, n_pivots)
            return QueryResult(q.id, matches, stats)

        lower, upper = bounds_all(q_row, T)
        radius = float(np.partition(upper, k - 1)[k - 1])
        order = np.argsort(lower, kind="stable")

        heap: list[tuple[float, int, int]] = []  # (-distance, -id_rank, row): max-heap
        computed = 0
        for row, lb in zip(order.tolist(), lower[order].tolist()):
            if lb > radius:
                break
            dist = self.metric.to_row(qrep, row)
            computed += 1
            item = (-dist, -int(rank[row]), row)
            if len(heap) < k:
                heapq.heappush(heap, item)
            elif item > heap[0]:
                heapq.heapreplace(heap, item)
            if len(heap) == k:
                radius = min(radius, -heap[0][0])

        best = sorted(heap, reverse=True)
        matches = tuple(Match(ids[row], -neg_d) for neg_d, _, row in best)
        stats = PruneStats(n, n - computed, 0, computed, n_pivots)
        return QueryResult(q.id, matches, stats)

    def run(self, q: Suffix, mode: Mode) -> QueryResult:
        if isinstance(mode, RangeMode):
            return self.range(q, mode.tau, mode.exact_distances)
        return self.knn(q, mode.k)


def range_query(table: PivotTable, data: Dataset, q: Suffix, tau: float,
                exact_distances: bool = False, metric: Metric | None = None) -> QueryResult:
    """All rows with d(q, y) <= tau, identical to exhaustive comparison."""
    return Searcher(table, data, metric).range(q, tau, exact_distances)


def knn_query(table: PivotTable, data: Dataset, q: Suffix, k: int,
              metric: Metric | None = None) -> QueryResult:
    """The k rows nearest to q, ordered by (distance, suffix id)."""
    return Searcher(table, data, metric).knn(q, k)


class BatchQueryError(PivotPruneError):
    """Some queries in a batch failed; the rest completed.

    ``results`` holds every result in input order (None for failures) and
    ``failures`` the (query id, exception) pairs.
    """

    def __init__(self, results, failures):
        self.results = results
        self.failures = failures
        detail = "; ".join(f"{qid}: {exc}" for qid, exc in failures[:5])
        super().__init__(f"{len(failures)} of {len(results)} queries failed ({detail})")


@dataclass(frozen=True)
class BatchResult:
    results: list[QueryResult]
    stats: PruneStats


def _batches(items: Sequence, size: int) -> Iterable[Sequence]:
    for start in range(0, len(items), size):
        yield items[start:start + size]


def batch_query(
    table: PivotTable,
    data: Dataset,
    queries: Sequence[Suffix],
    mode: Mode,
    batch_size: int = DEFAULT_BATCH_SIZE,
    workers: int = 1,
    metric: Metric | None = None,
    on_batch: Callable[[int, int], None] | None = None,
) -> BatchResult:
    """Run many queries in batches on a thread pool.

    Per-query results and stats do not depend on ``batch_size`` or
    ``workers``; output keeps input order. ``on_batch(done, total)`` is called
    after each batch.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    searcher = Searcher(table, data, metric)

    def one(q: Suffix):
        try:
            return searcher.run(q, mode), None
        except Exception as exc:  # reported per query, siblings keep running
            return None, exc

    outcomes = []
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for batch in _batches(list(queries), batch_size):
            if pool is None:
                outcomes.extend(one(q) for q in batch)
            else:
                outcomes.extend(pool.map(one, batch))
            if on_batch is not None:
                on_batch(len(outcomes), len(queries))
    finally:
        if pool is not None:
            pool.shutdown()

    results = [r for r, _ in outcomes]
    failures = [(q.id, exc) for q, (_, exc) in zip(queries, outcomes) if exc is not None]
    if failures:
        raise BatchQueryError(results, failures)
    total = sum((r.stats for r in results), PruneStats())
    return BatchResult(results, total)


def write_results(results: Iterable[QueryResult], fh: TextIO) -> None:
    """One JSON object per line: query_id, matches, stats."""
    for r in results:
        fh.write(json.dumps(r.to_record()) + "\n")
