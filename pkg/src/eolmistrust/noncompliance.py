"""Rule-based noncompliance labels from clinical notes.

Matching is case-insensitive at word boundaries. Hyphens count as part of a
word, so ``non-compliant`` is one token and ``compliant`` never matches inside
it. Negations are not handled: "denies noncompliance" is a positive.
"""

from __future__ import annotations

import csv
import os
import re
from typing import Iterable

from .cohort import Cohort
from .data_model import EhrDataset

NARROW_PATTERNS = ("noncompliant",)
DEFAULT_PATTERNS = ("noncompliant", "non-compliant", "noncompliance")


def compile_patterns(patterns: Iterable[str]) -> re.Pattern:
    terms = [p.strip() for p in patterns if p.strip()]
    if not terms:
        raise ValueError("at least one noncompliance pattern is required")
    alt = "|".join(re.escape(t) for t in sorted(set(terms), key=lambda t: (-len(t), t)))
    return re.compile(rf"(?<![\w-])(?:{alt})(?![\w-])", re.IGNORECASE)


def label_noncompliance(
    ds: EhrDataset, cohort: Cohort, patterns: Iterable[str] = DEFAULT_PATTERNS
) -> dict[str, bool]:
    """Map each cohort admission to whether any of its notes matches a pattern."""
    rx = compile_patterns(patterns)
    labels = {aid: False for aid in cohort.admission_ids}
    for note in ds.notes:
        aid = note.admission_id
        if aid in labels and not labels[aid] and rx.search(note.text):
            labels[aid] = True
    return labels


def read_patterns(path: str | os.PathLike) -> tuple[str, ...]:
    with open(path, encoding="utf-8") as fh:
        return tuple(line.strip() for line in fh if line.strip() and not line.startswith("#"))


def write_labels(labels: dict[str, bool], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("admission_id", "label"))
        for aid in sorted(labels):
            w.writerow((aid, int(labels[aid])))


def read_labels(path: str | os.PathLike) -> dict[str, bool]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {r["admission_id"]: r["label"] in ("1", "true", "True") for r in csv.DictReader(fh)}
