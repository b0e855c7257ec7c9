import random

import pytest
from hypothesis import given, settings, strategies as st

from eolmistrust.cohort import Cohort
from eolmistrust.data_model import EhrDataset
from eolmistrust.treatments import (
    durations_for_cohort,
    merge_spans,
    read_durations,
    total_duration,
    write_durations,
)

from conftest import adm, span
from oracles import merge_by_extension, random_span_sets


def test_merge_hand_traces():
    assert merge_spans([(0, 100), (500, 600)]) == [(0, 600)]
    assert merge_spans([(0, 120)]) == [(0, 120)]
    assert merge_spans([(0, 60), (700, 760)]) == [(0, 60), (700, 760)]


def test_gap_boundary():
    assert merge_spans([(0, 10), (610, 700)]) == [(0, 700)]
    assert merge_spans([(0, 10), (611, 700)]) == [(0, 10), (611, 700)]


def test_overlapping_and_nested():
    assert merge_spans([(50, 60), (0, 100), (90, 200)]) == [(0, 200)]


def test_negative_span_rejected():
    with pytest.raises(ValueError):
        merge_spans([(10, 5)])


def test_total_duration():
    assert total_duration([]) == 0
    assert total_duration([(0, 600)]) == 600
    assert total_duration([(0, 60), (700, 760)]) == 120


def test_durations_for_cohort():
    ds = EhrDataset.build(
        [adm("a", 2000), adm("b", 2000), adm("c", 2000)],
        treatment_spans=[span("a", 0, 100), span("a", 500, 600), span("b", 0, 50, "vasopressor")],
    )
    c = Cohort.of("c", ["a", "b", "c"])
    assert durations_for_cohort(ds, c, "ventilation") == {"a": 600}
    assert durations_for_cohort(ds, c, "ventilation", count_gaps=False) == {"a": 200}
    assert durations_for_cohort(ds, c, "vasopressor") == {"b": 50}
    assert durations_for_cohort(ds, Cohort.of("c", ["b"]), "ventilation") == {}


def test_durations_csv(tmp_path):
    write_durations({"ventilation": {"b": 5, "a": 600}}, tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text() == "admission_id,treatment,total_minutes\na,ventilation,600\nb,ventilation,5\n"
    assert [d.total_minutes for d in read_durations(tmp_path / "d.csv")] == [600, 5]


span_st = st.tuples(st.integers(0, 5000), st.integers(0, 1500)).map(lambda p: (p[0], p[0] + p[1]))


@settings(max_examples=200, deadline=None)
@given(st.lists(span_st, max_size=12), st.randoms(use_true_random=False))
def test_merge_properties(spans, rnd):
    merged = merge_spans(spans)
    assert merge_spans(merged) == merged
    shuffled = list(spans)
    rnd.shuffle(shuffled)
    assert merge_spans(shuffled) == merged
    for (s1, e1), (s2, e2) in zip(merged, merged[1:]):
        assert s2 - e1 > 600
    for s, e in spans:
        assert any(ms <= s and e <= me for ms, me in merged)
    if spans:
        assert total_duration(merged) >= max(e - s for s, e in spans)


def test_merge_random_sets_against_interval_oracle():
    rng = random.Random(7)
    for spans in random_span_sets(rng):
        expected = merge_by_extension(spans, 600)
        assert merge_spans(spans) == expected
        rng.shuffle(spans)
        assert merge_spans(spans) == expected
