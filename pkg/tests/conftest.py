import numpy as np
import pytest

from pivotprune import Dataset, DistanceSpec, build_index, greedy_farthest_point
from pivotprune.synth import clustered_vectors, mutated_sequences

LINE_POINTS = [0.0, 1.0, 2.0, 8.0, 9.0]


@pytest.fixture
def line():
    """1-D points {0, 1, 2, 8, 9} with ids p0..p4."""
    return Dataset.from_vectors(np.array(LINE_POINTS)[:, None])


@pytest.fixture
def euclid():
    return DistanceSpec("euclidean")


def small_instance(kind, n=300, k=8, seed=0, n_queries=20):
    """(data, queries, table) for a metric kind."""
    spec = DistanceSpec(kind)
    if kind == "levenshtein":
        data, queries = mutated_sequences(n, rng_seed=seed, n_queries=n_queries)
    else:
        data, queries = clustered_vectors(n, dim=6, clusters=5, rng_seed=seed,
                                          n_queries=n_queries)
    table = build_index(data, spec, greedy_farthest_point(data, spec, k))
    return data, queries, table


@pytest.fixture(params=["euclidean", "angular", "levenshtein"])
def instance(request):
    return small_instance(request.param)


class SpyMetric:
    """Wraps a Metric and records every (query, row) pair it evaluates."""

    def __new__(cls, spec, data):
        from pivotprune import Metric

        class _Spy(Metric):
            def __init__(self, spec, data):
                super().__init__(spec, data)
                self.rows_seen = []

            def to_rows(self, q, rows=None):
                rows = np.arange(len(self.data)) if rows is None else np.asarray(rows)
                self.rows_seen.extend(rows.tolist())
                return super().to_rows(q, rows)

            def to_row(self, q, i):
                self.rows_seen.append(int(i))
                return super().to_row(q, i)

        return _Spy(spec, data)


def worked_example():
    """Edit-distance realisation of the two-pivot example:
    d(x,z1)=2, d(x,z2)=6, d(y,z1)=7, d(y,z2)=9 (rows x, y, z1, z2)."""
    from pivotprune import PivotSet, Suffix

    x = Suffix("x", (0, 0))
    y = Suffix("y", (0, 0, 2, 2, 1, 1, 2, 0, 2, 0, 0))
    z1 = Suffix("z1", (0, 0, 0, 0))
    z2 = Suffix("z2", (1, 1, 1, 1, 1, 1))
    data = Dataset((x, y, z1, z2), {"a": 0, "b": 1, "c": 2})
    spec = DistanceSpec("levenshtein")
    table = build_index(data, spec, PivotSet((2, 3), 7.0, spec))
    return data, spec, table


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
