"""Event-log CSV parsing and suffix extraction.

The CSV dialect is UTF-8, comma separated, double-quote escaped, with a
header naming at least ``case_id``, ``activity`` and ``timestamp``. An
optional numeric ``outcome`` column is captured per case.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

from .errors import EventLogError
from .metricspace import Dataset, Suffix, make_alphabet

REQUIRED_COLUMNS = ("case_id", "activity", "timestamp")


@dataclass(frozen=True)
class Event:
    activity: str
    timestamp: datetime


@dataclass(frozen=True)
class EventLog:
    """Cases in first-appearance order, each sorted by (timestamp, file position)."""

    cases: Mapping[str, tuple[Event, ...]]
    outcomes: Mapping[str, float] = field(default_factory=dict)

    @property
    def alphabet(self) -> dict[str, int]:
        """Activity names interned in order of the sorted case traversal."""
        return make_alphabet(e.activity for events in self.cases.values() for e in events)

    def traces(self) -> dict[str, list[str]]:
        return {cid: [e.activity for e in events] for cid, events in self.cases.items()}


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is not None:
        ts = ts.astimezone(timezone.utc).replace(tzinfo=None)
    return ts


def parse_csv(path) -> EventLog:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EventLogError(f"{path}: empty file")
        missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise EventLogError(f"{path}: missing required column(s) {', '.join(missing)}")
        has_outcome = "outcome" in reader.fieldnames

        raw: dict[str, list[tuple[datetime, int, str]]] = {}
        outcomes: dict[str, float] = {}
        for pos, row in enumerate(reader):
            line = reader.line_num
            case_id = row["case_id"]
            try:
                ts = parse_timestamp(row["timestamp"] or "")
            except ValueError:
                raise EventLogError(
                    f"{path}: line {line}: unparseable timestamp {row['timestamp']!r}"
                ) from None
            raw.setdefault(case_id, []).append((ts, pos, row["activity"]))
            if has_outcome and (row.get("outcome") or "").strip():
                try:
                    outcomes[case_id] = float(row["outcome"])
                except ValueError:
                    raise EventLogError(
                        f"{path}: line {line}: non-numeric outcome {row['outcome']!r}"
                    ) from None
    if not raw:
        raise EventLogError(f"{path}: no events")

    cases = {cid: tuple(Event(act, ts) for ts, _, act in sorted(evts, key=lambda e: e[:2]))
             for cid, evts in raw.items()}
    return EventLog(cases, outcomes)


def write_csv(log: EventLog, path) -> None:
    """Write a log back out, one row per event in case order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        cols = list(REQUIRED_COLUMNS) + (["outcome"] if log.outcomes else [])
        writer.writerow(cols)
        for cid, events in log.cases.items():
            for e in events:
                row = [cid, e.activity, e.timestamp.isoformat()]
                if log.outcomes:
                    row.append(repr(log.outcomes[cid]) if cid in log.outcomes else "")
                writer.writerow(row)


@dataclass(frozen=True)
class SuffixSpec:
    min_length: int = 1
    max_length: int | None = None
    include_full_trace: bool = True

    def __post_init__(self):
        if self.min_length < 1:
            raise ValueError("min_length must be >= 1")
        if self.max_length is not None and self.max_length < self.min_length:
            raise ValueError("max_length must be >= min_length")

    def keeps(self, position: int, length: int) -> bool:
        if position == 1 and not self.include_full_trace:
            return False
        if length < self.min_length:
            return False
        return self.max_length is None or length <= self.max_length


def extract_suffixes(log: EventLog, spec: SuffixSpec = SuffixSpec()) -> Dataset:
    """One suffix per cut point of every case, id ``"<case_id>:<position>"``.

    Position 1 is the full trace. Rows follow case order, then position.
    """
    alphabet = log.alphabet
    suffixes = []
    for cid, events in log.cases.items():
        seq = [alphabet[e.activity] for e in events]
        outcome = log.outcomes.get(cid)
        for i in range(1, len(seq) + 1):
            tail = seq[i - 1:]
            if spec.keeps(i, len(tail)):
                suffixes.append(Suffix(f"{cid}:{i}", tuple(tail), None, outcome))
    return Dataset(tuple(suffixes), alphabet)


DATASET_FORMAT = "pivotprune-dataset"


def dataset_to_dict(data: Dataset) -> dict:
    rows = []
    for s in data:
        row: dict = {"id": s.id, "activities": list(s.activities)}
        if s.features is not None:
            row["features"] = list(s.features)
        if s.outcome is not None:
            row["outcome"] = s.outcome
        rows.append(row)
    return {
        "format": DATASET_FORMAT,
        "version": 1,
        "alphabet": dict(data.alphabet),
        "feature_dim": data.feature_dim,
        "suffixes": rows,
    }


def dataset_from_dict(doc: Mapping) -> Dataset:
    if doc.get("format") != DATASET_FORMAT:
        raise EventLogError("not a pivotprune dataset document")
    suffixes = tuple(
        Suffix(r["id"], tuple(r["activities"]),
               tuple(r["features"]) if r.get("features") is not None else None,
               r.get("outcome"))
        for r in doc["suffixes"]
    )
    return Dataset(suffixes, doc["alphabet"], doc.get("feature_dim"))


def save_dataset(data: Dataset, path) -> None:
    """JSON: alphabet plus per-suffix id, activity ids, optional features/outcome."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dataset_to_dict(data), fh, separators=(",", ":"))
        fh.write("\n")


def load_dataset(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return dataset_from_dict(json.load(fh))
