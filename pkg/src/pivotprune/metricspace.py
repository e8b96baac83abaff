"""Suffixes, datasets and the metrics that pruning relies on.

Every shipped distance is a true metric (the triangle inequality is what
makes pivot pruning exact). Distances are float64; Levenshtein values are
integers stored as floats.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence, Union

import numba
import numpy as np

from .errors import (
    DatasetError,
    DimensionMismatchError,
    MissingFeaturesError,
    ZeroVectorError,
)

DISTANCE_KINDS = ("euclidean", "angular", "levenshtein")


@dataclass(frozen=True)
class Suffix:
    """The remaining activities of one case from some cut point onward."""

    id: str
    activities: tuple[int, ...]
    features: tuple[float, ...] | None = None
    outcome: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "activities", tuple(int(a) for a in self.activities))
        if self.features is not None:
            object.__setattr__(self, "features", tuple(float(x) for x in self.features))
        if self.outcome is not None:
            object.__setattr__(self, "outcome", float(self.outcome))
        if not self.activities:
            raise DatasetError(f"suffix {self.id!r} has no activities")
        if any(a < 0 for a in self.activities):
            raise DatasetError(f"suffix {self.id!r} has a negative activity id")

    def with_features(self, features) -> Suffix:
        return Suffix(self.id, self.activities, tuple(features), self.outcome)


@dataclass(frozen=True)
class Dataset:
    """An ordered, immutable set of suffixes.

    Row order is the row order of every pivot table built from it.
    """

    suffixes: tuple[Suffix, ...]
    alphabet: Mapping[str, int]
    feature_dim: int | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "suffixes", tuple(self.suffixes))
        object.__setattr__(self, "alphabet", dict(self.alphabet))
        ids = sorted(self.alphabet.values())
        if ids != list(range(len(ids))):
            raise DatasetError("alphabet ids must be exactly 0..len(alphabet)-1")
        n_act = len(ids)

        seen: set[str] = set()
        dims = set()
        n_with = 0
        for s in self.suffixes:
            if s.id in seen:
                raise DatasetError(f"duplicate suffix id {s.id!r}")
            seen.add(s.id)
            if max(s.activities) >= n_act:
                raise DatasetError(f"suffix {s.id!r} uses an activity id outside the alphabet")
            if s.features is not None:
                n_with += 1
                dims.add(len(s.features))
        if n_with and n_with != len(self.suffixes):
            raise DatasetError("either all suffixes carry features or none do")
        if len(dims) > 1:
            raise DimensionMismatchError(f"mixed feature dimensions {sorted(dims)}")
        dim = dims.pop() if dims else None
        if self.feature_dim is None:
            object.__setattr__(self, "feature_dim", dim)
        elif dim is not None and dim != self.feature_dim:
            raise DimensionMismatchError(
                f"feature_dim={self.feature_dim} but suffixes have dimension {dim}"
            )
        if self.feature_dim is not None and self.feature_dim < 1:
            raise DatasetError("feature_dim must be positive")

    @classmethod
    def from_vectors(cls, vectors, ids: Sequence[str] | None = None, prefix: str = "p") -> Dataset:
        """Wrap plain feature vectors; every suffix gets the single activity 0."""
        X = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
        if ids is None:
            width = len(str(max(len(X) - 1, 0)))
            ids = [f"{prefix}{i:0{width}d}" for i in range(len(X))]
        suffixes = [Suffix(str(i), (0,), tuple(row)) for i, row in zip(ids, X)]
        return cls(tuple(suffixes), {"x": 0}, X.shape[1] if len(X) else None)

    def __len__(self) -> int:
        return len(self.suffixes)

    def __getitem__(self, i: int) -> Suffix:
        return self.suffixes[i]

    def __iter__(self):
        return iter(self.suffixes)

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.suffixes)

    @cached_property
    def _row_of(self) -> dict[str, int]:
        return {s.id: i for i, s in enumerate(self.suffixes)}

    def row_of(self, suffix_id: str) -> int:
        try:
            return self._row_of[suffix_id]
        except KeyError:
            raise KeyError(f"no suffix with id {suffix_id!r}") from None

    @cached_property
    def feature_matrix(self) -> np.ndarray:
        if self.feature_dim is None:
            raise MissingFeaturesError("dataset has no feature vectors")
        X = np.array([s.features for s in self.suffixes], dtype=np.float64)
        X = X.reshape(len(self.suffixes), self.feature_dim)
        X.setflags(write=False)
        return X

    @cached_property
    def packed_activities(self) -> tuple[np.ndarray, np.ndarray]:
        """(flat, offsets): row i is flat[offsets[i]:offsets[i+1]]."""
        lengths = np.fromiter((len(s.activities) for s in self.suffixes), dtype=np.int64,
                              count=len(self.suffixes))
        offsets = np.zeros(len(self.suffixes) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        flat = np.fromiter((a for s in self.suffixes for a in s.activities), dtype=np.int32,
                           count=int(offsets[-1]))
        flat.setflags(write=False)
        offsets.setflags(write=False)
        return flat, offsets


@dataclass(frozen=True)
class DistanceSpec:
    kind: str = "levenshtein"

    def __post_init__(self):
        if self.kind not in DISTANCE_KINDS:
            raise ValueError(f"unknown distance kind {self.kind!r}; choose from {DISTANCE_KINDS}")

    @property
    def needs_features(self) -> bool:
        return self.kind != "levenshtein"


# -- kernels -----------------------------------------------------------------
# Every evaluation path (single pair, one-to-many, index build) goes through
# these, so a distance is bit-identical however it is requested.

def _row_norms(X: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(X * X, axis=1))


def _euclidean_rows(X: np.ndarray, q: np.ndarray) -> np.ndarray:
    diff = X - q
    return np.sqrt(np.sum(diff * diff, axis=1))


def _unit_rows(X: np.ndarray) -> np.ndarray:
    norms = _row_norms(X)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise ZeroVectorError(f"angular distance undefined for zero vector (row {bad})")
    return X / norms[:, None]


def _angular_rows(U: np.ndarray, u: np.ndarray) -> np.ndarray:
    # Angle via atan2 of chord lengths: stable near 0 and pi, unlike arccos.
    return 2.0 * np.arctan2(_row_norms(U - u), _row_norms(U + u)) / math.pi


@numba.njit(nogil=True, cache=True)
def _levenshtein(a, b):
    n = a.shape[0]
    m = b.shape[0]
    row = np.empty(m + 1, np.int64)
    for j in range(m + 1):
        row[j] = j
    for i in range(1, n + 1):
        diag = row[0]
        row[0] = i
        ai = a[i - 1]
        for j in range(1, m + 1):
            up = row[j]
            best = diag if ai == b[j - 1] else diag + 1
            if up + 1 < best:
                best = up + 1
            if row[j - 1] + 1 < best:
                best = row[j - 1] + 1
            row[j] = best
            diag = up
    return row[m]


@numba.njit(nogil=True, cache=True)
def _levenshtein_rows(flat, offsets, rows, q, out):
    for t in range(rows.shape[0]):
        r = rows[t]
        out[t] = _levenshtein(q, flat[offsets[r]:offsets[r + 1]])


def levenshtein(a: Sequence[int], b: Sequence[int]) -> int:
    """Unit-cost edit distance between two activity-id sequences."""
    return int(_levenshtein(np.asarray(a, dtype=np.int32), np.asarray(b, dtype=np.int32)))


def _vector(s: Suffix, dim: int | None) -> np.ndarray:
    if s.features is None:
        raise MissingFeaturesError(f"suffix {s.id!r} has no feature vector")
    v = np.asarray(s.features, dtype=np.float64)
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatchError(
            f"suffix {s.id!r} has dimension {v.shape[0]}, expected {dim}"
        )
    return v


def distance(spec: DistanceSpec, a: Suffix, b: Suffix) -> float:
    if spec.kind == "levenshtein":
        return float(levenshtein(a.activities, b.activities))
    va = _vector(a, None)
    vb = _vector(b, va.shape[0])
    if spec.kind == "euclidean":
        return float(_euclidean_rows(va[None, :], vb)[0])
    ua = _unit_rows(va[None, :])
    ub = _unit_rows(vb[None, :])[0]
    return float(_angular_rows(ua, ub)[0])


class Metric:
    """A distance bound to one dataset, with a thread-safe evaluation counter.

    ``evaluations`` counts every exact distance computed through this object;
    tests read it to audit the pruning statistics.
    """

    def __init__(self, spec: DistanceSpec, data: Dataset):
        self.spec = spec
        self.data = data
        self._lock = threading.Lock()
        self._evaluations = 0
        if spec.kind == "levenshtein":
            self._flat, self._offsets = data.packed_activities
        elif spec.kind == "euclidean":
            self._X = data.feature_matrix
        else:
            self._X = _unit_rows(data.feature_matrix)

    @property
    def evaluations(self) -> int:
        return self._evaluations

    def reset_counter(self) -> None:
        with self._lock:
            self._evaluations = 0

    def _count(self, n: int) -> None:
        with self._lock:
            self._evaluations += n

    def prepare(self, s: Suffix) -> np.ndarray:
        """Query-side representation, validated against the dataset."""
        if self.spec.kind == "levenshtein":
            return np.asarray(s.activities, dtype=np.int32)
        v = _vector(s, self.data.feature_dim)
        if self.spec.kind == "euclidean":
            return v
        return _unit_rows(v[None, :])[0]

    def row_repr(self, i: int) -> np.ndarray:
        if self.spec.kind == "levenshtein":
            return self._flat[self._offsets[i]:self._offsets[i + 1]]
        return self._X[i]

    def to_rows(self, q: np.ndarray, rows=None) -> np.ndarray:
        """Distances from a prepared query to the given dataset rows."""
        if rows is None:
            rows = np.arange(len(self.data), dtype=np.int64)
        else:
            rows = np.asarray(rows, dtype=np.int64)
        self._count(rows.shape[0])
        if self.spec.kind == "levenshtein":
            out = np.empty(rows.shape[0], dtype=np.float64)
            _levenshtein_rows(self._flat, self._offsets, rows, q, out)
            return out
        if self.spec.kind == "euclidean":
            return _euclidean_rows(self._X[rows], q)
        return _angular_rows(self._X[rows], q)

    def to_row(self, q: np.ndarray, i: int) -> float:
        self._count(1)
        if self.spec.kind == "levenshtein":
            return float(_levenshtein(q, self.row_repr(i)))
        if self.spec.kind == "euclidean":
            return float(_euclidean_rows(self._X[i:i + 1], q)[0])
        return float(_angular_rows(self._X[i:i + 1], q)[0])

    def same_point(self, q: np.ndarray, i: int) -> bool:
        """True when q's representation is bit-identical to row i's."""
        r = self.row_repr(i)
        return r.shape == q.shape and bool(np.array_equal(r, q))


@dataclass(frozen=True)
class Violation:
    axiom: str  # "triangle", "symmetry" or "identity"
    rows: tuple[int, ...]
    lhs: float
    rhs: float


DistanceFn = Callable[[Suffix, Suffix], float]


def check_metric_axioms(
    spec: Union[DistanceSpec, DistanceFn],
    data: Dataset,
    n_triples: int = 1000,
    rng_seed: int = 0,
    atol: float = 1e-9,
) -> list[Violation]:
    """Sample random triples and report metric-axiom violations.

    ``spec`` may also be a plain callable ``(a, b) -> float``, which is how
    tests feed in deliberately broken distances.
    """
    if len(data) == 0:
        raise DatasetError("cannot check axioms on an empty dataset")
    if n_triples < 1:
        raise ValueError("n_triples must be positive")
    if isinstance(spec, DistanceSpec):
        def d(a, b):
            return distance(spec, a, b)
    else:
        d = spec

    rng = np.random.default_rng(rng_seed)
    triples = rng.integers(0, len(data), size=(n_triples, 3))
    found: dict[tuple, Violation] = {}

    def report(v: Violation):
        found.setdefault((v.axiom, v.rows), v)

    for x, y, z in triples.tolist():
        sx, sy, sz = data[x], data[y], data[z]
        dxy, dyx = d(sx, sy), d(sy, sx)
        dxz, dzy = d(sx, sz), d(sz, sy)
        if dxy > dxz + dzy + atol:
            report(Violation("triangle", (x, y, z), dxy, dxz + dzy))
        if abs(dxy - dyx) > atol:
            report(Violation("symmetry", (x, y), dxy, dyx))
        dxx = d(sx, sx)
        if abs(dxx) > atol:
            report(Violation("identity", (x,), dxx, 0.0))
    return list(found.values())


def featurize_bag_of_activities(data: Dataset) -> Dataset:
    """Replace feature vectors with per-activity occurrence counts."""
    dim = len(data.alphabet)
    suffixes = []
    for s in data:
        counts = np.bincount(np.asarray(s.activities), minlength=dim).astype(np.float64)
        suffixes.append(s.with_features(counts))
    return Dataset(tuple(suffixes), data.alphabet, dim)


def make_alphabet(names: Iterable[str]) -> dict[str, int]:
    """Intern names in first-appearance order."""
    alphabet: dict[str, int] = {}
    for name in names:
        alphabet.setdefault(name, len(alphabet))
    return alphabet
