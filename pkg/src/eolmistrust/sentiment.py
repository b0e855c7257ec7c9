"""Lexicon sentiment of a stay's concatenated notes.

Scoring is deliberately plain: de-identification placeholders such as
``[**5-1-18**]`` are removed, the remaining text is split into lowercase
alphabetic tokens, and the raw score is the mean polarity of the tokens
found in the lexicon. Punctuation is never interpreted, so bracket runs like
``:[`` cannot read as emoticons.
"""

from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping

from .cohort import Cohort
from .data_model import EhrDataset, NoteRecord
from .stats import zscore

PLACEHOLDER = re.compile(r"\[\*\*.*?\*\*\]", re.DOTALL)
TOKEN = re.compile(r"[a-z]+")


@dataclass(frozen=True)
class SentimentScore:
    admission_id: str
    raw: float
    normalized: float


def _parse_lexicon(lines: Iterable[str], source: str) -> dict[str, float]:
    lex: dict[str, float] = {}
    for i, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            token, value = line.split("\t")
            polarity = float(value)
        except ValueError:
            raise ValueError(f"{source}:{i}: expected 'token<TAB>polarity'") from None
        token = token.strip().lower()
        if not -1.0 <= polarity <= 1.0:
            raise ValueError(f"{source}:{i}: polarity {polarity} outside [-1, 1]")
        if token in lex:
            raise ValueError(f"{source}:{i}: duplicate token {token!r}")
        lex[token] = polarity
    return lex


def load_lexicon(path: str | os.PathLike | None = None) -> dict[str, float]:
    """Read a ``token<TAB>polarity`` file; the bundled lexicon when ``path`` is None."""
    if path is None:
        text = resources.files("eolmistrust").joinpath("data/default_lexicon.tsv").read_text("utf-8")
        return _parse_lexicon(text.splitlines(), "default_lexicon.tsv")
    with open(path, encoding="utf-8") as fh:
        return _parse_lexicon(fh, str(path))


def tokenize(text: str) -> list[str]:
    return TOKEN.findall(PLACEHOLDER.sub(" ", text).lower())


def score_text(text: str, lexicon: Mapping[str, float]) -> float:
    hits = [lexicon[t] for t in tokenize(text) if t in lexicon]
    return sum(hits) / len(hits) if hits else 0.0


def score_stay(notes: Iterable[NoteRecord], lexicon: Mapping[str, float]) -> float:
    if not lexicon:
        raise ValueError("lexicon is empty")
    ordered = sorted(notes, key=lambda n: n.chart_time)
    return score_text("\n".join(n.text for n in ordered), lexicon)


def score_population(
    ds: EhrDataset, cohort: Cohort, lexicon: Mapping[str, float]
) -> list[SentimentScore]:
    """Raw and z-normalized sentiment for every cohort admission, ordered by id."""
    by_adm = ds.notes_by_admission()
    raw = [score_stay(by_adm.get(aid, ()), lexicon) for aid in cohort.admission_ids]
    if len(raw) < 2:
        raise ValueError("sentiment normalization needs at least two admissions")
    try:
        norm = zscore(raw)
    except ValueError:
        raise ValueError("raw sentiment scores are constant across the population") from None
    return [
        SentimentScore(aid, r, float(z)) for aid, r, z in zip(cohort.admission_ids, raw, norm)
    ]


def write_scores(scores: Iterable[SentimentScore], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("admission_id", "raw", "normalized"))
        for s in scores:
            w.writerow((s.admission_id, repr(s.raw), repr(s.normalized)))
