"""End-of-life cohort and notes-population selection."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .data_model import EhrDataset

EOL_MIN_STAY_MINUTES = 360
NOTES_MIN_STAY_MINUTES = 720


class CohortError(ValueError):
    pass


@dataclass(frozen=True)
class Cohort:
    name: str
    admission_ids: tuple[str, ...]

    def __post_init__(self):
        ids = tuple(sorted(set(self.admission_ids)))
        if len(ids) != len(self.admission_ids):
            raise CohortError(f"cohort {self.name!r}: duplicate admission ids")
        object.__setattr__(self, "admission_ids", ids)

    @classmethod
    def of(cls, name: str, ids: Iterable[str]) -> "Cohort":
        return cls(name, tuple(sorted(set(ids))))

    def __len__(self) -> int:
        return len(self.admission_ids)

    def __iter__(self):
        return iter(self.admission_ids)

    @cached_property
    def id_set(self) -> frozenset[str]:
        return frozenset(self.admission_ids)

    def __contains__(self, aid) -> bool:
        return aid in self.id_set


def build_eol_cohort(
    ds: EhrDataset,
    min_stay_minutes: int = EOL_MIN_STAY_MINUTES,
    include_snf: bool = True,
) -> Cohort:
    """Black and white admissions that ended in death, hospice or SNF discharge.

    The stay is measured over the whole admission; ``include_snf=False`` gives
    the stricter cohort without skilled-nursing discharges.
    """
    locations = {"hospice", "snf"} if include_snf else {"hospice"}
    ids = [
        a.admission_id
        for a in ds.admissions
        if a.stay_minutes >= min_stay_minutes
        and a.race in ("white", "black")
        and (a.died_in_hospital or a.discharge_location in locations)
    ]
    return Cohort.of("eol" if include_snf else "eol_strict", ids)


def build_notes_population(
    ds: EhrDataset, min_stay_minutes: int = NOTES_MIN_STAY_MINUTES
) -> Cohort:
    """Admissions with a stay of at least 12 hours and at least one note."""
    with_notes = {n.admission_id for n in ds.notes}
    ids = [
        a.admission_id
        for a in ds.admissions
        if a.stay_minutes >= min_stay_minutes and a.admission_id in with_notes
    ]
    return Cohort.of("notes", ids)


def split_by_race(c: Cohort, ds: EhrDataset) -> tuple[Cohort, Cohort]:
    """Partition a black/white cohort into ``(white, black)``."""
    adm = ds.admission_map()
    white, black = [], []
    for aid in c.admission_ids:
        race = adm[aid].race
        if race == "white":
            white.append(aid)
        elif race == "black":
            black.append(aid)
        else:
            raise CohortError(f"admission {aid!r} has race {race!r}; expected white or black")
    return Cohort.of(f"{c.name}_white", white), Cohort.of(f"{c.name}_black", black)


def restrict(c: Cohort, ids: Iterable[str], name: str | None = None) -> Cohort:
    keep = set(ids)
    return Cohort.of(name or c.name, (a for a in c.admission_ids if a in keep))


def write_cohort(c: Cohort, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("admission_id\n")
        for aid in c.admission_ids:
            fh.write(f"{aid}\n")


def read_cohort(path: str | os.PathLike, name: str | None = None) -> Cohort:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["admission_id"]:
        raise CohortError(f"{path}: expected header 'admission_id'")
    return Cohort.of(name or os.path.splitext(os.path.basename(path))[0], (r[0] for r in rows[1:] if r))
