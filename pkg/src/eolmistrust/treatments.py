"""Treatment span merging and per-admission treatment durations."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

from .cohort import Cohort
from .data_model import EhrDataset

# roughly one nursing shift
MERGE_GAP_MINUTES = 600

Span = tuple[int, int]


@dataclass(frozen=True)
class TreatmentDuration:
    admission_id: str
    treatment: str
    total_minutes: int


def merge_spans(spans: Iterable[Sequence[int]], max_gap: int = MERGE_GAP_MINUTES) -> list[Span]:
    """Merge spans whose gap to the running union is at most ``max_gap`` minutes.

    Overlapping spans are always merged. The result is sorted and every pair of
    consecutive output spans is separated by more than ``max_gap``.

    >>> merge_spans([(0, 100), (500, 600)])
    [(0, 600)]
    >>> merge_spans([(0, 60), (700, 760)])
    [(0, 60), (700, 760)]
    """
    items = []
    for s in spans:
        start, end = int(s[0]), int(s[1])
        if end < start:
            raise ValueError(f"negative-length span ({start}, {end})")
        items.append((start, end))
    items.sort()
    merged: list[Span] = []
    for start, end in items:
        if merged and start - merged[-1][1] <= max_gap:
            prev_start, prev_end = merged[-1]
            merged[-1] = (prev_start, max(prev_end, end))
        else:
            merged.append((start, end))
    return merged


def total_duration(merged: Iterable[Sequence[int]]) -> int:
    return sum(int(e) - int(s) for s, e in merged)


def durations_for_cohort(
    ds: EhrDataset,
    cohort: Cohort,
    treatment: str,
    max_gap: int = MERGE_GAP_MINUTES,
    count_gaps: bool = True,
) -> dict[str, int]:
    """Total treatment minutes for each cohort admission with at least one span.

    With ``count_gaps=False`` absorbed gaps are not counted: the duration is the
    length of the union of the raw spans instead of the merged envelope.
    """
    by_adm = ds.spans_by_admission(treatment)
    out = {}
    for aid in cohort.admission_ids:
        spans = by_adm.get(aid)
        if not spans:
            continue
        raw = [(s.start_time, s.end_time) for s in spans]
        merged = merge_spans(raw, max_gap if count_gaps else 0)
        out[aid] = total_duration(merged)
    return out


def write_durations(durations: dict[str, dict[str, int]], path: str | os.PathLike) -> None:
    """Write ``{treatment: {admission_id: minutes}}`` as a flat CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("admission_id", "treatment", "total_minutes"))
        for treatment in sorted(durations):
            for aid in sorted(durations[treatment]):
                w.writerow((aid, treatment, durations[treatment][aid]))


def read_durations(path: str | os.PathLike) -> list[TreatmentDuration]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            TreatmentDuration(r["admission_id"], r["treatment"], int(r["total_minutes"]))
            for r in csv.DictReader(fh)
        ]
