"""Prediction-log parsing and windowing.

Input is CSV with header ``timestamp,score,label`` (optionally followed by
``subject_id``). Bad rows are collected, not fatal, unless they exceed
``max_bad_fraction`` of all data rows.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Sequence

from .roc_metrics import ScoredBatch

HEADER = ["timestamp", "score", "label"]
HEADER_WITH_ID = HEADER + ["subject_id"]
DEFAULT_MAX_BAD_FRACTION = 0.01


class LogFormatError(ValueError):
    pass


class LogQualityError(ValueError):
    def __init__(self, message: str, report: str = ""):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class PredictionRecord:
    timestamp: dt.date
    score: float
    label: int
    subject_id: Optional[str] = None


@dataclass
class ParsedLog:
    records: list[PredictionRecord] = field(default_factory=list)
    errors: list[tuple[int, str]] = field(default_factory=list)

    def error_report(self) -> str:
        return "".join(f"line {ln}: {reason}\n" for ln, reason in self.errors)


def _parse_row(row: Sequence[str], has_id: bool) -> PredictionRecord:
    width = 4 if has_id else 3
    if len(row) != width:
        raise ValueError(f"expected {width} fields, got {len(row)}")
    try:
        ts = dt.date.fromisoformat(row[0].strip())
    except ValueError:
        raise ValueError("bad timestamp") from None
    try:
        score = float(row[1])
    except ValueError:
        raise ValueError("bad score") from None
    if not math.isfinite(score):
        raise ValueError("invalid score")
    if not 0.0 <= score <= 1.0:
        raise ValueError("score out of range")
    label = row[2].strip()
    if label not in ("0", "1"):
        raise ValueError("label must be 0 or 1")
    subject = row[3] if has_id and row[3] != "" else None
    return PredictionRecord(ts, score, int(label), subject)


def parse_log(stream: IO[str], max_bad_fraction: float = DEFAULT_MAX_BAD_FRACTION) -> ParsedLog:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise LogFormatError("empty log: missing header")
    header = [h.strip() for h in header]
    if header not in (HEADER, HEADER_WITH_ID):
        raise LogFormatError(f"unexpected header {','.join(header)!r}")
    has_id = header == HEADER_WITH_ID

    out = ParsedLog()
    rows = 0
    for row in reader:
        if not row:
            continue
        rows += 1
        try:
            out.records.append(_parse_row(row, has_id))
        except ValueError as exc:
            out.errors.append((reader.line_num, str(exc)))
    if rows and len(out.errors) / rows > max_bad_fraction:
        raise LogQualityError("log quality below threshold", out.error_report())
    return out


@dataclass(frozen=True)
class WindowedBatch:
    window_id: str
    batch: ScoredBatch
    gap: bool = False
    partial: bool = False

    @property
    def m(self) -> int:
        return self.batch.m

    @property
    def n(self) -> int:
        return self.batch.n

    @property
    def total(self) -> int:
        return self.batch.m + self.batch.n

    @property
    def usable(self) -> bool:
        return self.m > 0 and self.n > 0

    @property
    def flags(self) -> tuple[str, ...]:
        out = []
        if self.gap:
            out.append("gap")
        elif not self.usable:
            out.append("AUC undefined")
        if self.partial:
            out.append("partial")
        return tuple(out)


def _batch(records: Iterable[PredictionRecord]) -> ScoredBatch:
    pos, neg = [], []
    for r in records:
        (pos if r.label == 1 else neg).append(r.score)
    return ScoredBatch(pos, neg)


def window_by_month(records: Sequence[PredictionRecord]) -> list[WindowedBatch]:
    """One window per calendar month, empty months included as gaps."""
    if not records:
        return []
    buckets: dict[tuple[int, int], list[PredictionRecord]] = {}
    for r in records:
        buckets.setdefault((r.timestamp.year, r.timestamp.month), []).append(r)
    (y, mo), last = min(buckets), max(buckets)
    out = []
    while (y, mo) <= last:
        recs = buckets.get((y, mo), [])
        out.append(WindowedBatch(f"{y:04d}-{mo:02d}", _batch(recs), gap=not recs))
        y, mo = (y + 1, 1) if mo == 12 else (y, mo + 1)
    return out


def window_by_count(records: Sequence[PredictionRecord], window_size: int) -> list[WindowedBatch]:
    """Consecutive chunks of ``window_size`` records in input order."""
    if window_size < 2:
        raise ValueError("window_size must be at least 2")
    out = []
    for idx, start in enumerate(range(0, len(records), window_size)):
        chunk = records[start:start + window_size]
        out.append(WindowedBatch(str(idx), _batch(chunk), partial=len(chunk) < window_size))
    return out


def window_by_step(
    records: Sequence[PredictionRecord], origin: Optional[dt.date] = None
) -> list[WindowedBatch]:
    """One window per day, labelled by days since ``origin`` (default: first day).

    This is the grouping used for simulator logs, where step ``k`` is dated
    ``k`` days after the epoch. Days without records are emitted as gaps.
    """
    if not records:
        return []
    buckets: dict[dt.date, list[PredictionRecord]] = {}
    for r in records:
        buckets.setdefault(r.timestamp, []).append(r)
    first, last = min(buckets), max(buckets)
    if origin is None:
        origin = first
    elif origin > first:
        raise ValueError("origin is after the first record")
    out = []
    day = first
    while day <= last:
        recs = buckets.get(day, [])
        out.append(WindowedBatch(str((day - origin).days), _batch(recs), gap=not recs))
        day += dt.timedelta(days=1)
    return out
