"""The suffix-to-pivot distance table and its on-disk format.

An index is a file pair sharing a base name:

``<name>.meta``
    JSON document: format version, distance kind, N, K, pivot indices and
    ids, coverage radius, dataset fingerprint.
``<name>.pvtb``
    16-byte little-endian header ``b"PVTB"``, ``uint32`` format version,
    ``uint32`` N, ``uint32`` K, followed by N*K IEEE-754 float64 values
    (little-endian, row-major).
"""

from __future__ import annotations

import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .errors import FingerprintMismatchError, IndexFormatError, SpecMismatchError
from .metricspace import Dataset, DistanceSpec, Metric
from .pivots import PivotSet

MAGIC = b"PVTB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")
_FNV_OFFSET = np.uint64(0xCBF29CE484222325)
_FNV_PRIME = np.uint64(0x100000001B3)


@numba.njit(cache=True)
def _fnv1a64(buf):
    h = _FNV_OFFSET
    for b in buf:
        h ^= np.uint64(b)
        h *= _FNV_PRIME
    return h


def dataset_fingerprint(data: Dataset) -> int:
    """64-bit FNV-1a over ids, activity sequences and (if any) feature bytes.

    Each suffix contributes ``utf8(id) 0x00 u32(len) u32(activity)...`` and,
    when features exist, their float64 little-endian bytes.
    """
    parts = []
    for s in data:
        parts.append(s.id.encode("utf-8") + b"\x00")
        parts.append(struct.pack(f"<I{len(s.activities)}I", len(s.activities), *s.activities))
        if s.features is not None:
            parts.append(np.asarray(s.features, dtype="<f8").tobytes())
    buf = np.frombuffer(b"".join(parts), dtype=np.uint8)
    return int(_fnv1a64(buf))


@dataclass(frozen=True, eq=False)
class PivotTable:
    """Dense N x K matrix; entry (i, k) is d(suffix_i, pivot_k)."""

    matrix: np.ndarray
    pivots: PivotSet
    distance_spec: DistanceSpec
    dataset_fingerprint: int
    pivot_ids: tuple[str, ...]

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if m is self.matrix and m.flags.writeable:
            m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[1] != len(self.pivots):
            raise ValueError(f"matrix shape {m.shape} does not match {len(self.pivots)} pivots")
        if self.pivots.distance_spec != self.distance_spec:
            raise SpecMismatchError("pivot set and table use different distances")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def k(self) -> int:
        return self.matrix.shape[1]

    def with_matrix(self, matrix: np.ndarray) -> PivotTable:
        return PivotTable(np.array(matrix, dtype=np.float64), self.pivots,
                          self.distance_spec, self.dataset_fingerprint, self.pivot_ids)

    def prefix(self, k: int, data: Dataset) -> PivotTable:
        """Table restricted to the first k pivots (no re-evaluation)."""
        return PivotTable(self.matrix[:, :k].copy(), self.pivots.prefix(k, data),
                          self.distance_spec, self.dataset_fingerprint, self.pivot_ids[:k])


def build_index(data: Dataset, spec: DistanceSpec, pivots: PivotSet,
                metric: Metric | None = None, workers: int = 1) -> PivotTable:
    """Evaluate every suffix against every pivot (exactly N*K evaluations)."""
    if pivots.distance_spec != spec:
        raise SpecMismatchError(
            f"pivots were selected with {pivots.distance_spec.kind}, index requested {spec.kind}"
        )
    n = len(data)
    for p in pivots.pivot_indices:
        if p >= n:
            raise IndexError(f"pivot index {p} out of range for {n} rows")
    metric = metric or Metric(spec, data)
    reps = [metric.row_repr(p) for p in pivots.pivot_indices]
    matrix = np.empty((n, len(pivots)), dtype=np.float64)

    def fill(lo: int, hi: int):
        rows = np.arange(lo, hi)
        for k, rep in enumerate(reps):
            matrix[lo:hi, k] = metric.to_rows(rep, rows)

    if workers <= 1 or n < 2 * workers:
        fill(0, n)
    else:
        edges = np.linspace(0, n, workers + 1).astype(int)
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(fill, edges[:-1], edges[1:]))
    return PivotTable(matrix, pivots, spec, dataset_fingerprint(data),
                      tuple(data[p].id for p in pivots.pivot_indices))


def _base(path) -> Path:
    path = Path(path)
    if path.suffix in (".meta", ".pvtb"):
        path = path.with_suffix("")
    return path


def _atomic_write(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def save_index(table: PivotTable, path) -> tuple[Path, Path]:
    base = _base(path)
    meta_path = base.with_name(base.name + ".meta")
    bin_path = base.with_name(base.name + ".pvtb")
    meta = {
        "format": "pivotprune-index",
        "version": FORMAT_VERSION,
        "distance": table.distance_spec.kind,
        "n": table.n,
        "k": table.k,
        "pivot_indices": list(table.pivots.pivot_indices),
        "pivot_ids": list(table.pivot_ids),
        "coverage_radius": table.pivots.coverage_radius,
        "dataset_fingerprint": f"{table.dataset_fingerprint:016x}",
        "matrix_file": bin_path.name,
    }
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, table.n, table.k)
    _atomic_write(bin_path, header + table.matrix.astype("<f8").tobytes(order="C"))
    _atomic_write(meta_path, (json.dumps(meta, indent=2) + "\n").encode("utf-8"))
    return meta_path, bin_path


def load_index(path, data: Dataset) -> PivotTable:
    """Load an index pair and bind it to ``data``.

    Raises FingerprintMismatchError when the index was built from a different
    dataset, IndexFormatError when the files are malformed or truncated.
    """
    base = _base(path)
    meta_path = base.with_name(base.name + ".meta")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IndexFormatError(f"{meta_path}: not valid JSON ({exc})") from exc
    if meta.get("format") != "pivotprune-index":
        raise IndexFormatError(f"{meta_path}: not a pivotprune index")
    if meta.get("version") != FORMAT_VERSION:
        raise IndexFormatError(f"{meta_path}: unsupported version {meta.get('version')}")

    expected = f"{dataset_fingerprint(data):016x}"
    if meta["dataset_fingerprint"] != expected:
        raise FingerprintMismatchError(
            f"index fingerprint {meta['dataset_fingerprint']} != dataset {expected}; "
            "the index is stale for this dataset"
        )

    bin_path = meta_path.with_name(meta.get("matrix_file", base.name + ".pvtb"))
    raw = bin_path.read_bytes()
    if len(raw) < _HEADER.size:
        raise IndexFormatError(f"{bin_path}: truncated header")
    magic, version, n, k = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise IndexFormatError(f"{bin_path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"{bin_path}: unsupported version {version}")
    if (n, k) != (meta["n"], meta["k"]) or n != len(data):
        raise IndexFormatError(
            f"{bin_path}: dimensions {n}x{k} disagree with metadata/dataset"
        )
    body = raw[_HEADER.size:]
    if len(body) != n * k * 8:
        raise IndexFormatError(
            f"{bin_path}: size mismatch, expected {n * k * 8} matrix bytes, found {len(body)}"
        )
    matrix = np.frombuffer(body, dtype="<f8").reshape(n, k).astype(np.float64)

    spec = DistanceSpec(meta["distance"])
    idx = tuple(meta["pivot_indices"])
    ids = tuple(meta["pivot_ids"])
    if tuple(data[i].id for i in idx) != ids:
        raise FingerprintMismatchError("pivot ids do not match the dataset rows")
    pivots = PivotSet(idx, float(meta["coverage_radius"]), spec)
    return PivotTable(matrix, pivots, spec, int(meta["dataset_fingerprint"], 16), ids)
