"""Binary interpersonal indicators from coded chart events."""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable

import numpy as np

from .cohort import Cohort
from .data_model import EhrDataset, normalize_label

log = logging.getLogger(__name__)


@lru_cache(maxsize=1 << 16)
def feature_name(item_label: str, value_label: str) -> str:
    return f"{normalize_label(item_label)}: {normalize_label(value_label)}"


def read_whitelist(path: str | os.PathLike | None = None) -> frozenset[str]:
    """Item labels from a one-per-line file; the bundled list when ``path`` is None."""
    if path is None:
        text = resources.files("eolmistrust").joinpath("data/interpersonal_items.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    items = (normalize_label(line) for line in text.splitlines())
    return frozenset(i for i in items if i and not i.startswith("#"))


DEFAULT_WHITELIST = read_whitelist()


@dataclass(frozen=True)
class FeatureVocabulary:
    names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")

    def __len__(self) -> int:
        return len(self.names)

    def index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.names)}


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Admissions x features presence matrix (``uint8`` cells)."""

    admission_ids: tuple[str, ...]
    vocabulary: FeatureVocabulary
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.admission_ids), len(self.vocabulary)):
            raise ValueError(
                f"matrix shape {self.values.shape} does not match "
                f"{len(self.admission_ids)} rows x {len(self.vocabulary)} features"
            )

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (
            self.admission_ids == other.admission_ids
            and self.vocabulary == other.vocabulary
            and np.array_equal(self.values, other.values)
        )

    def row(self, admission_id: str) -> np.ndarray:
        return self.values[self.admission_ids.index(admission_id)]


def build_vocabulary(ds: EhrDataset, whitelist: Iterable[str] | None = None) -> FeatureVocabulary:
    """One feature per observed ``(item, value)`` pair, sorted lexicographically.

    When ``whitelist`` is given only events whose item label is listed count.
    """
    allowed = None if whitelist is None else {normalize_label(w) for w in whitelist}
    names = {
        feature_name(e.item_label, e.value_label)
        for e in ds.chart_events
        if allowed is None or normalize_label(e.item_label) in allowed
    }
    if not names:
        log.warning("empty feature vocabulary (no matching chart events)")
    return FeatureVocabulary(tuple(sorted(names)))


def encode(ds: EhrDataset, cohort: Cohort, vocab: FeatureVocabulary) -> FeatureMatrix:
    rows = {aid: i for i, aid in enumerate(cohort.admission_ids)}
    cols = vocab.index()
    X = np.zeros((len(rows), len(cols)), dtype=np.uint8)
    for e in ds.chart_events:
        i = rows.get(e.admission_id)
        if i is None:
            continue
        j = cols.get(feature_name(e.item_label, e.value_label))
        if j is not None:
            X[i, j] = 1
    return FeatureMatrix(cohort.admission_ids, vocab, X)


def write_vocabulary(vocab: FeatureVocabulary, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for n in vocab.names:
            fh.write(n + "\n")


def read_vocabulary(path: str | os.PathLike) -> FeatureVocabulary:
    with open(path, encoding="utf-8") as fh:
        return FeatureVocabulary(tuple(line.rstrip("\n") for line in fh if line.strip()))


def write_matrix(fm: FeatureMatrix, path: str | os.PathLike) -> None:
    """Sparse triplets ``admission_id,feature_name,1`` for every set cell."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("admission_id", "feature_name", "value"))
        for i, j in zip(*np.nonzero(fm.values)):
            w.writerow((fm.admission_ids[i], fm.vocabulary.names[j], 1))


def read_matrix(path: str | os.PathLike, cohort: Cohort, vocab: FeatureVocabulary) -> FeatureMatrix:
    rows = {aid: i for i, aid in enumerate(cohort.admission_ids)}
    cols = vocab.index()
    X = np.zeros((len(rows), len(cols)), dtype=np.uint8)
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            X[rows[r["admission_id"]], cols[r["feature_name"]]] = 1
    return FeatureMatrix(cohort.admission_ids, vocab, X)
