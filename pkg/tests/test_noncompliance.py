from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import adm, note
from eolmistrust.cohort import Cohort
from eolmistrust.data_model import EhrDataset
from eolmistrust.noncompliance import (
    DEFAULT_PATTERNS,
    NARROW_PATTERNS,
    compile_patterns,
    label_noncompliance,
    read_labels,
    read_patterns,
    write_labels,
)


def _label(text, patterns=DEFAULT_PATTERNS):
    ds = EhrDataset.build(admissions=[adm("a")], notes=[note("a", text)])
    return label_noncompliance(ds, Cohort.of("c", ["a"]), patterns)["a"]


@pytest.mark.parametrize(
    "text,expected",
    [
        ("pt is noncompliant with meds", True),
        ("patient compliant with regimen", False),
        ("Patient NONCOMPLIANT overnight", True),
        ("history of non-compliance", False),
        ("history of noncompliance.", True),
        ("pt non-compliant with diet", True),
        ("noncompliantly", False),
        ("reviewed medication compliance", False),
        ("(noncompliant)", True),
    ],
)
def test_default_patterns(text, expected):
    assert _label(text) is expected


def test_narrow_patterns_only_match_noncompliant():
    assert _label("pt non-compliant with diet", NARROW_PATTERNS) is False
    assert _label("history of noncompliance", NARROW_PATTERNS) is False
    assert _label("pt noncompliant", NARROW_PATTERNS) is True


def test_admission_without_notes_is_negative():
    ds = EhrDataset.build(admissions=[adm("a"), adm("b")], notes=[note("a", "noncompliant")])
    assert label_noncompliance(ds, Cohort.of("c", ["a", "b"])) == {"a": True, "b": False}


def test_empty_patterns_rejected():
    with pytest.raises(ValueError):
        compile_patterns(["", "  "])


def test_pattern_metacharacters_are_literal():
    assert compile_patterns(["a.b"]).search("axb") is None


words = st.sampled_from(["pt", "noncompliant", "compliant", "non-compliant", "meds", "refused", "Noncompliance"])
texts = st.lists(words, max_size=6).map(" ".join)


@settings(max_examples=100, deadline=None)
@given(st.lists(texts, max_size=4), texts)
def test_adding_a_note_never_clears_a_label(existing, extra):
    base = [note("a", t, i) for i, t in enumerate(existing)]
    c = Cohort.of("c", ["a"])
    before = label_noncompliance(EhrDataset.build(admissions=[adm("a")], notes=base), c)["a"]
    after = label_noncompliance(EhrDataset.build(admissions=[adm("a")], notes=base + [note("a", extra, 99)]), c)["a"]
    assert after >= before


def test_io(tmp_path):
    p = tmp_path / "p.txt"
    p.write_text("# terms\nnoncompliant\n\nrefuses care\n")
    assert read_patterns(p) == ("noncompliant", "refuses care")
    write_labels({"b": False, "a": True}, tmp_path / "l.csv")
    assert (tmp_path / "l.csv").read_text() == "admission_id,label\na,1\nb,0\n"
    assert read_labels(tmp_path / "l.csv") == {"a": True, "b": False}
