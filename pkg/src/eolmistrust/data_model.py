"""Domain records and CSV ingestion for MIMIC-shaped extracts.

A dataset directory holds up to five tables::

    admissions.csv   admission_id,patient_id,admit_time,discharge_time,race,
                     died_in_hospital,discharge_location
    chartevents.csv  admission_id,item_label,value_label,chart_time
    notes.csv        admission_id,chart_time,category,text
    durations.csv    admission_id,treatment,start_time,end_time
    severity.csv     admission_id,oasis,sapsii

Only ``admissions.csv`` is required. Timestamps are stored as integer minutes
since 1970-01-01 00:00 (seconds are truncated).
"""

from __future__ import annotations

import csv
import datetime as _dt
import logging
import math
import os
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable

log = logging.getLogger(__name__)

RACES = ("white", "black", "other")
DISCHARGE_LOCATIONS = ("hospice", "snf", "home", "other", "none")
TREATMENTS = ("ventilation", "vasopressor")
NOTE_CATEGORIES = ("nursing", "discharge summary", "physician", "social work", "other")

_EPOCH = _dt.datetime(1970, 1, 1)
_TIME_FORMAT = "%Y-%m-%d %H:%M:%S"

COLUMNS = {
    "admissions.csv": (
        "admission_id",
        "patient_id",
        "admit_time",
        "discharge_time",
        "race",
        "died_in_hospital",
        "discharge_location",
    ),
    "chartevents.csv": ("admission_id", "item_label", "value_label", "chart_time"),
    "notes.csv": ("admission_id", "chart_time", "category", "text"),
    "durations.csv": ("admission_id", "treatment", "start_time", "end_time"),
    "severity.csv": ("admission_id", "oasis", "sapsii"),
}


class DataError(Exception):
    """Base class for ingestion failures."""


class SchemaError(DataError):
    """A required file or column is missing."""


class RowError(DataError):
    """A single row failed parsing or an invariant check."""

    def __init__(self, file: str, row: int, message: str):
        self.file = file
        self.row = row
        self.message = message
        super().__init__(f"{file}:{row}: {message}")


class IntegrityError(DataError):
    """A record references an admission_id that is not in admissions.csv."""


@dataclass(frozen=True)
class Admission:
    admission_id: str
    patient_id: str
    admit_time: int
    discharge_time: int
    race: str
    died_in_hospital: bool
    discharge_location: str

    @property
    def stay_minutes(self) -> int:
        return self.discharge_time - self.admit_time


@dataclass(frozen=True)
class ChartEventRecord:
    admission_id: str
    item_label: str
    value_label: str
    chart_time: int


@dataclass(frozen=True)
class NoteRecord:
    admission_id: str
    chart_time: int
    category: str
    text: str


@dataclass(frozen=True)
class TreatmentSpanRecord:
    admission_id: str
    treatment: str
    start_time: int
    end_time: int


@dataclass(frozen=True)
class SeverityRecord:
    admission_id: str
    oasis: float
    sapsii: float


@dataclass(frozen=True)
class RowIssue:
    """Diagnostic for a row rejected during non-strict loading."""

    file: str
    row: int
    message: str

    def __str__(self) -> str:
        return f"{self.file}:{self.row}: {self.message}"


@dataclass(frozen=True)
class EhrDataset:
    """Immutable, validated collection of all tables.

    Admissions are sorted by id; every other table is sorted by
    ``(admission_id, time)`` with file order as the final tie-break.
    ``issues`` lists rows rejected while loading and does not take part in
    equality.
    """

    admissions: tuple[Admission, ...] = ()
    chart_events: tuple[ChartEventRecord, ...] = ()
    notes: tuple[NoteRecord, ...] = ()
    treatment_spans: tuple[TreatmentSpanRecord, ...] = ()
    severity: tuple[SeverityRecord, ...] = ()
    issues: tuple[RowIssue, ...] = field(default=(), compare=False)

    def __post_init__(self):
        ids = [a.admission_id for a in self.admissions]
        if len(set(ids)) != len(ids):
            raise IntegrityError("duplicate admission_id in admissions")
        known = set(ids)
        for name in ("chart_events", "notes", "treatment_spans", "severity"):
            dangling = sorted({r.admission_id for r in getattr(self, name)} - known)
            if dangling:
                raise IntegrityError(
                    f"{name} reference unknown admission_id(s): {', '.join(dangling[:10])}"
                )

    @classmethod
    def build(cls, admissions=(), chart_events=(), notes=(), treatment_spans=(), severity=(), issues=()):
        """Construct a dataset, applying the canonical record ordering."""
        return cls(
            admissions=tuple(sorted(admissions, key=lambda a: a.admission_id)),
            chart_events=tuple(sorted(chart_events, key=lambda r: (r.admission_id, r.chart_time))),
            notes=tuple(sorted(notes, key=lambda r: (r.admission_id, r.chart_time))),
            treatment_spans=tuple(
                sorted(treatment_spans, key=lambda r: (r.admission_id, r.start_time))
            ),
            severity=tuple(sorted(severity, key=lambda r: r.admission_id)),
            issues=tuple(issues),
        )

    def admission_map(self) -> dict[str, Admission]:
        return {a.admission_id: a for a in self.admissions}

    def notes_by_admission(self) -> dict[str, list[NoteRecord]]:
        return _group(self.notes)

    def events_by_admission(self) -> dict[str, list[ChartEventRecord]]:
        return _group(self.chart_events)

    def spans_by_admission(self, treatment: str) -> dict[str, list[TreatmentSpanRecord]]:
        return _group(s for s in self.treatment_spans if s.treatment == treatment)

    def severity_map(self) -> dict[str, SeverityRecord]:
        return {s.admission_id: s for s in self.severity}


def _group(records: Iterable) -> dict:
    out: dict = {}
    for r in records:
        out.setdefault(r.admission_id, []).append(r)
    return out


# -- field parsers ---------------------------------------------------------


def parse_time(text: str) -> int:
    """Parse ``YYYY-MM-DD HH:MM:SS`` into integer minutes since the epoch."""
    try:
        t = _dt.datetime.strptime(text.strip(), _TIME_FORMAT)
    except ValueError:
        raise ValueError(f"unparseable timestamp {text!r} (expected YYYY-MM-DD HH:MM:SS)")
    return int((t - _EPOCH).total_seconds() // 60)


def format_time(minutes: int) -> str:
    return (_EPOCH + _dt.timedelta(minutes=int(minutes))).strftime(_TIME_FORMAT)


def normalize_race(text: str) -> str:
    t = text.strip().upper()
    if t.startswith("WHITE"):
        return "white"
    if t.startswith("BLACK"):
        return "black"
    return "other"


def normalize_discharge_location(text: str) -> str:
    t = normalize_label(text)
    if not t or t == "none":
        return "none"
    if t.startswith("hospice"):
        return "hospice"
    if t.startswith("snf") or "skilled nursing" in t:
        return "snf"
    if t.startswith("home"):
        return "home"
    return "other"


@lru_cache(maxsize=1 << 16)
def normalize_label(text: str) -> str:
    """Lowercase, trim and collapse internal whitespace."""
    return re.sub(r"\s+", " ", text.strip().lower())


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "t", "yes", "y"):
        return True
    if t in ("0", "false", "f", "no", "n", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_real(text: str, name: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ValueError(f"{name} is not a number: {text!r}")
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite")
    if v < 0:
        raise ValueError(f"{name} must be >= 0")
    return v


def _parse_category(text: str) -> str:
    t = normalize_label(text)
    if t.startswith("nurs"):
        return "nursing"
    if t.startswith("discharge"):
        return "discharge summary"
    if t.startswith("physician"):
        return "physician"
    if t.startswith("social"):
        return "social work"
    return "other"


def _admission(row: dict) -> Admission:
    aid = row["admission_id"].strip()
    if not aid:
        raise ValueError("admission_id is empty")
    admit = parse_time(row["admit_time"])
    disch = parse_time(row["discharge_time"])
    if disch < admit:
        raise ValueError("invariant violated: discharge_time >= admit_time")
    return Admission(
        admission_id=aid,
        patient_id=row["patient_id"].strip(),
        admit_time=admit,
        discharge_time=disch,
        race=normalize_race(row["race"]),
        died_in_hospital=_parse_bool(row["died_in_hospital"]),
        discharge_location=normalize_discharge_location(row["discharge_location"]),
    )


def _chart_event(row: dict) -> ChartEventRecord:
    item = normalize_label(row["item_label"])
    value = normalize_label(row["value_label"])
    if not item or not value:
        raise ValueError("invariant violated: item_label and value_label must be nonempty")
    return ChartEventRecord(row["admission_id"].strip(), item, value, parse_time(row["chart_time"]))


def _note(row: dict) -> NoteRecord:
    if not row["text"].strip():
        raise ValueError("invariant violated: note text must be nonempty")
    return NoteRecord(
        row["admission_id"].strip(),
        parse_time(row["chart_time"]),
        _parse_category(row["category"]),
        row["text"],
    )


def _span(row: dict) -> TreatmentSpanRecord:
    treatment = normalize_label(row["treatment"])
    if treatment not in TREATMENTS:
        raise ValueError(f"unknown treatment {row['treatment']!r}")
    start = parse_time(row["start_time"])
    end = parse_time(row["end_time"])
    if end < start:
        raise ValueError("invariant violated: end_time >= start_time")
    return TreatmentSpanRecord(row["admission_id"].strip(), treatment, start, end)


def _severity(row: dict) -> SeverityRecord:
    return SeverityRecord(
        row["admission_id"].strip(),
        _parse_real(row["oasis"], "oasis"),
        _parse_real(row["sapsii"], "sapsii"),
    )


_PARSERS: dict[str, Callable[[dict], object]] = {
    "admissions.csv": _admission,
    "chartevents.csv": _chart_event,
    "notes.csv": _note,
    "durations.csv": _span,
    "severity.csv": _severity,
}


def _read_table(path: Path, strict: bool, issues: list[RowIssue]) -> list:
    name = path.name
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in COLUMNS[name]:
            if col not in header:
                raise SchemaError(f"{name}: missing required column {col!r}")
        parse = _PARSERS[name]
        out = []
        # row numbers are 1-based file lines, header is line 1
        for i, row in enumerate(reader, start=2):
            try:
                if None in row.values():
                    raise ValueError("too few fields")
                out.append(parse(row))
            except ValueError as exc:
                if strict:
                    raise RowError(name, i, str(exc)) from None
                issue = RowIssue(name, i, str(exc))
                log.warning("rejected row %s", issue)
                issues.append(issue)
        return out


def load_dataset(dir_path: str | os.PathLike, strict: bool = False) -> EhrDataset:
    """Load and validate a dataset directory.

    Parameters
    ----------
    dir_path : path
        Directory containing ``admissions.csv`` and optionally the other
        tables. Missing optional tables load as empty.
    strict : bool
        Raise :class:`RowError` on the first malformed row instead of
        rejecting it into ``EhrDataset.issues``.

    Raises
    ------
    SchemaError
        ``admissions.csv`` or a required column is missing.
    RowError
        A malformed row, or a duplicate admission id, when ``strict``.
    IntegrityError
        A record references an admission id absent from ``admissions.csv``.
    """
    root = Path(dir_path)
    if not (root / "admissions.csv").is_file():
        raise SchemaError(f"{root}: admissions.csv not found")
    issues: list[RowIssue] = []

    admissions = []
    seen: set[str] = set()
    rejected_ids: set[str] = set()
    raw = _read_table(root / "admissions.csv", strict, issues)
    for rownum, adm in enumerate(raw, start=2):
        if adm.admission_id in seen:
            msg = f"duplicate admission_id {adm.admission_id!r}"
            if strict:
                raise RowError("admissions.csv", rownum, msg)
            issues.append(RowIssue("admissions.csv", rownum, msg))
            continue
        seen.add(adm.admission_id)
        admissions.append(adm)
    # ids of admission rows that were rejected, so their children can be dropped too
    with open(root / "admissions.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            aid = (row.get("admission_id") or "").strip()
            if aid and aid not in seen:
                rejected_ids.add(aid)

    tables: dict[str, list] = {}
    for name in ("chartevents.csv", "notes.csv", "durations.csv", "severity.csv"):
        path = root / name
        tables[name] = _read_table(path, strict, issues) if path.is_file() else []

    dangling = []
    for name, records in tables.items():
        kept = []
        for r in records:
            if r.admission_id in seen:
                kept.append(r)
            elif r.admission_id in rejected_ids:
                issues.append(
                    RowIssue(name, 0, f"admission {r.admission_id!r} was rejected; record dropped")
                )
            else:
                dangling.append(f"{name}: {r.admission_id}")
        tables[name] = kept
    if dangling:
        raise IntegrityError(
            "referential integrity violated, unknown admission_id in "
            + "; ".join(sorted(set(dangling))[:20])
        )

    return EhrDataset.build(
        admissions=admissions,
        chart_events=tables["chartevents.csv"],
        notes=tables["notes.csv"],
        treatment_spans=tables["durations.csv"],
        severity=tables["severity.csv"],
        issues=issues,
    )


def _fmt_real(v: float) -> str:
    return repr(float(v))


def write_dataset(ds: EhrDataset, dir_path: str | os.PathLike) -> None:
    """Write all five tables in the canonical CSV schemas."""
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    rows = {
        "admissions.csv": (
            (
                a.admission_id,
                a.patient_id,
                format_time(a.admit_time),
                format_time(a.discharge_time),
                a.race.upper(),
                "1" if a.died_in_hospital else "0",
                a.discharge_location,
            )
            for a in ds.admissions
        ),
        "chartevents.csv": (
            (e.admission_id, e.item_label, e.value_label, format_time(e.chart_time))
            for e in ds.chart_events
        ),
        "notes.csv": (
            (n.admission_id, format_time(n.chart_time), n.category, n.text) for n in ds.notes
        ),
        "durations.csv": (
            (s.admission_id, s.treatment, format_time(s.start_time), format_time(s.end_time))
            for s in ds.treatment_spans
        ),
        "severity.csv": (
            (s.admission_id, _fmt_real(s.oasis), _fmt_real(s.sapsii)) for s in ds.severity
        ),
    }
    for name, body in rows.items():
        with open(root / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS[name])
            w.writerows(body)


@dataclass(frozen=True)
class SummaryReport:
    admissions: int
    chart_events: int
    notes: int
    treatment_spans: int
    severity: int
    white: int
    black: int
    other: int

    def as_dict(self) -> dict[str, int]:
        return dict(self.__dict__)


def dataset_summary(ds: EhrDataset) -> SummaryReport:
    races = {r: 0 for r in RACES}
    for a in ds.admissions:
        races[a.race] += 1
    return SummaryReport(
        admissions=len(ds.admissions),
        chart_events=len(ds.chart_events),
        notes=len(ds.notes),
        treatment_spans=len(ds.treatment_spans),
        severity=len(ds.severity),
        **races,
    )
