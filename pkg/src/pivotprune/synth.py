"""Seeded synthetic data for tests and benchmarks.

Gaussian clusters give pruning-friendly vector data; mutated template
sequences give edit-distance data with many exact ties.
"""

from __future__ import annotations

from datetime import datetime, timedelta

import numpy as np

from .ingest import Event, EventLog
from .metricspace import Dataset, DistanceSpec, Metric, Suffix


def clustered_vectors(n: int, dim: int = 8, clusters: int = 8, rng_seed: int = 0,
                      n_queries: int = 0, center_scale: float = 10.0,
                      spread: float = 1.0) -> tuple[Dataset, list[Suffix]]:
    """n points (plus n_queries held-out points) from a Gaussian mixture.

    Each suffix carries its cluster as its single activity.
    """
    rng = np.random.default_rng(rng_seed)
    centers = rng.uniform(-center_scale, center_scale, size=(clusters, dim))

    def draw(count: int, prefix: str) -> list[Suffix]:
        labels = rng.integers(0, clusters, size=count)
        X = centers[labels] + rng.normal(0.0, spread, size=(count, dim))
        width = len(str(max(count - 1, 0)))
        return [Suffix(f"{prefix}{i:0{width}d}", (int(c),), tuple(x))
                for i, (c, x) in enumerate(zip(labels.tolist(), X))]

    alphabet = {f"c{c}": c for c in range(clusters)}
    data = Dataset(tuple(draw(n, "s")), alphabet, dim)
    return data, draw(n_queries, "q")


def _mutate(seq: list[int], n_edits: int, alphabet_size: int, rng) -> list[int]:
    seq = list(seq)
    for _ in range(n_edits):
        op = rng.integers(0, 3)
        if op == 0 or len(seq) <= 1:
            seq.insert(int(rng.integers(0, len(seq) + 1)), int(rng.integers(0, alphabet_size)))
        elif op == 1:
            del seq[int(rng.integers(0, len(seq)))]
        else:
            seq[int(rng.integers(0, len(seq)))] = int(rng.integers(0, alphabet_size))
    return seq


def mutated_sequences(n: int, clusters: int = 8, alphabet_size: int = 12, rng_seed: int = 0,
                      n_queries: int = 0, length: tuple[int, int] = (6, 16),
                      max_edits: int = 4, dim: int | None = None) -> tuple[Dataset, list[Suffix]]:
    """Activity sequences made by randomly editing a few template traces.

    With ``dim`` set, each suffix also gets a random feature vector so the
    same rows can be searched under the vector metrics.
    """
    rng = np.random.default_rng(rng_seed)
    templates = [rng.integers(0, alphabet_size, size=rng.integers(*length)).tolist()
                 for _ in range(clusters)]

    def draw(count: int, prefix: str) -> list[Suffix]:
        out = []
        width = len(str(max(count - 1, 0)))
        for i in range(count):
            t = templates[int(rng.integers(0, clusters))]
            seq = _mutate(t, int(rng.integers(0, max_edits + 1)), alphabet_size, rng)
            feats = tuple(rng.normal(size=dim) + 0.5) if dim else None
            out.append(Suffix(f"{prefix}{i:0{width}d}", tuple(seq), feats))
        return out

    alphabet = {f"a{i}": i for i in range(alphabet_size)}
    data = Dataset(tuple(draw(n, "s")), alphabet, dim)
    return data, draw(n_queries, "q")


def synthetic_log(n_cases: int, rng_seed: int = 0, n_activities: int = 10,
                  length: tuple[int, int] = (3, 8), with_outcome: bool = True) -> EventLog:
    """An event log of random traces with increasing timestamps."""
    rng = np.random.default_rng(rng_seed)
    names = [f"act_{i}" for i in range(n_activities)]
    start = datetime(2024, 1, 1)
    cases = {}
    outcomes = {}
    lengths = rng.integers(length[0], length[1] + 1, size=n_cases)
    acts = rng.integers(0, n_activities, size=int(lengths.sum()))
    pos = 0
    for c, L in enumerate(lengths.tolist()):
        t0 = start + timedelta(minutes=c)
        cases[f"case{c}"] = tuple(Event(names[a], t0 + timedelta(seconds=j))
                                  for j, a in enumerate(acts[pos:pos + L].tolist()))
        pos += L
        if with_outcome:
            outcomes[f"case{c}"] = float(L)
    return EventLog(cases, outcomes)


def sample_tau(data: Dataset, spec: DistanceSpec, percentiles, n_pairs: int = 2000,
               rng_seed: int = 0, metric: Metric | None = None):
    """Thresholds at the given percentiles of randomly sampled pairwise distances."""
    metric = metric or Metric(spec, data)
    rng = np.random.default_rng(rng_seed)
    n = len(data)
    i = rng.integers(0, n, size=n_pairs)
    j = (i + rng.integers(1, n, size=n_pairs)) % n  # never i == j
    d = np.array([metric.to_row(metric.row_repr(a), b) for a, b in zip(i.tolist(), j.tolist())])
    return np.percentile(d, percentiles)
