import pytest
from hypothesis import given, settings, strategies as st

from eolmistrust.cohort import (
    Cohort,
    CohortError,
    build_eol_cohort,
    build_notes_population,
    read_cohort,
    split_by_race,
    write_cohort,
)
from eolmistrust.data_model import EhrDataset

from conftest import adm, note


def test_eol_rules(small_ds):
    # a1 died 7h white: in; a2 died 5h: out; a3 snf 10h black: in; a4 home: out; a5 other race: out
    assert build_eol_cohort(small_ds).admission_ids == ("a1", "a3")


def test_eol_threshold_inclusive():
    ds = EhrDataset.build([adm("x", 360), adm("y", 359)])
    assert build_eol_cohort(ds).admission_ids == ("x",)


def test_eol_strict_excludes_snf(small_ds):
    assert build_eol_cohort(small_ds, include_snf=False).admission_ids == ("a1",)


def test_hospice_included():
    ds = EhrDataset.build([adm("h", 400, died=False, loc="hospice"), adm("o", 400, died=False, loc="other")])
    assert build_eol_cohort(ds).admission_ids == ("h",)


def test_notes_population():
    ds = EhrDataset.build(
        [adm("a", 13 * 60), adm("b", 13 * 60), adm("c", 11 * 60), adm("d", 720)],
        notes=[note("a", "x"), note("c", "y"), note("d", "z")],
    )
    assert build_notes_population(ds).admission_ids == ("a", "d")


def test_split_by_race():
    ds = EhrDataset.build([adm("a"), adm("b", race="black"), adm("c")])
    white, black = split_by_race(Cohort.of("c", ["a", "b", "c"]), ds)
    assert (len(white), len(black)) == (2, 1)
    white, black = split_by_race(Cohort.of("c", ["a", "c"]), ds)
    assert len(black) == 0 and white.admission_ids == ("a", "c")


def test_split_rejects_other_race():
    ds = EhrDataset.build([adm("a", race="other")])
    with pytest.raises(CohortError):
        split_by_race(Cohort.of("c", ["a"]), ds)


def test_cohort_file_roundtrip(tmp_path):
    c = Cohort.of("eol", ["b", "a", "c"])
    write_cohort(c, tmp_path / "eol.csv")
    assert (tmp_path / "eol.csv").read_text() == "admission_id\na\nb\nc\n"
    assert read_cohort(tmp_path / "eol.csv") == c


admission_st = st.builds(
    lambda i, stay, race, died, loc: adm(f"id{i}", stay, race, died, loc),
    st.integers(0, 40),
    st.integers(0, 2000),
    st.sampled_from(["white", "black", "other"]),
    st.booleans(),
    st.sampled_from(["hospice", "snf", "home", "other", "none"]),
)


def _dedup(adms):
    seen = {}
    for a in adms:
        seen.setdefault(a.admission_id, a)
    return list(seen.values())


@settings(max_examples=100, deadline=None)
@given(st.lists(admission_st, max_size=20), st.lists(admission_st, max_size=20))
def test_eol_subset_idempotent_monotone(xs, ys):
    xs = _dedup(xs)
    ys = [a for a in _dedup(ys) if a.admission_id not in {x.admission_id for x in xs}]
    ds = EhrDataset.build(xs)
    c = build_eol_cohort(ds)
    assert set(c.admission_ids) <= {a.admission_id for a in xs}
    assert build_eol_cohort(ds) == c
    bigger = build_eol_cohort(EhrDataset.build(xs + ys))
    assert set(c.admission_ids) <= set(bigger.admission_ids)
    white, black = split_by_race(c, ds)
    assert set(white.admission_ids).isdisjoint(black.admission_ids)
    assert set(white.admission_ids) | set(black.admission_ids) == set(c.admission_ids)
