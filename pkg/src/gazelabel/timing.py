"""Annotation-time comparison across labeling methods."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError

__all__ = ["METHODS", "REFERENCE_STUDY", "TimingRecord", "TimingReport", "timing_report", "read_timing_csv"]

METHODS = ("freehand", "bbox", "gaze")


@dataclass(frozen=True)
class TimingRecord:
    annotator: str
    method: str
    total_seconds: float
    label_count: int

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.total_seconds < 0:
            raise ValidationError("total_seconds must be >= 0")
        if self.label_count <= 0:
            raise ValidationError("label_count must be > 0")


# two pathologists, 50 keratin pearls per method, stopwatch totals in seconds
REFERENCE_STUDY = (
    TimingRecord("A", "freehand", 692, 50),
    TimingRecord("B", "freehand", 924, 50),
    TimingRecord("A", "bbox", 290, 50),
    TimingRecord("B", "bbox", 281, 50),
    TimingRecord("A", "gaze", 109, 50),
    TimingRecord("B", "gaze", 133, 50),
)


@dataclass(frozen=True)
class TimingReport:
    per_annotator: dict  # method -> {annotator: seconds per label}
    average: dict  # method -> mean of the per-annotator averages
    pooled: dict  # method -> total seconds / total labels
    savings: dict  # other method -> 1 - average[gaze] / average[other]

    def rows(self):
        out = []
        for method in METHODS:
            if method not in self.average:
                continue
            out.append(
                {
                    "method": method,
                    **{f"annotator_{a}": v for a, v in sorted(self.per_annotator[method].items())},
                    "average": self.average[method],
                    "pooled_average": self.pooled[method],
                    "gaze_savings": self.savings.get(method),
                }
            )
        return out


def timing_report(records) -> TimingReport:
    records = list(records)
    if not records:
        raise ValidationError("timing report needs at least one record")
    totals = defaultdict(lambda: defaultdict(lambda: [0.0, 0]))
    for r in records:
        if r.label_count <= 0:
            raise ValidationError("label_count must be > 0")
        acc = totals[r.method][r.annotator]
        acc[0] += r.total_seconds
        acc[1] += r.label_count

    per_annotator, average, pooled = {}, {}, {}
    for method in METHODS:
        if method not in totals:
            continue
        by_annot = {a: s / c for a, (s, c) in totals[method].items()}
        per_annotator[method] = by_annot
        average[method] = sum(by_annot.values()) / len(by_annot)
        pooled[method] = sum(s for s, _ in totals[method].values()) / sum(c for _, c in totals[method].values())

    savings = {}
    if "gaze" in average:
        for method in METHODS:
            if method != "gaze" and method in average and average[method] > 0:
                savings[method] = 1.0 - average["gaze"] / average[method]
    return TimingReport(per_annotator, average, pooled, savings)


def read_timing_csv(path):
    """Rows ``annotator,method,total_seconds,label_count`` with a header line."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [
            TimingRecord(row["annotator"], row["method"], float(row["total_seconds"]), int(row["label_count"]))
            for row in csv.DictReader(fh)
        ]
