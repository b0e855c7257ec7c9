import textwrap

import pytest

from eolmistrust.data_model import (
    Admission,
    ChartEventRecord,
    EhrDataset,
    NoteRecord,
    SeverityRecord,
    TreatmentSpanRecord,
)

ADMISSIONS_HEADER = "admission_id,patient_id,admit_time,discharge_time,race,died_in_hospital,discharge_location\n"


@pytest.fixture
def write_tables(tmp_path):
    """Write ``{filename: body}`` into a fresh dataset directory."""

    def _write(tables):
        for name, body in tables.items():
            (tmp_path / name).write_text(textwrap.dedent(body).lstrip(), encoding="utf-8")
        return tmp_path

    return _write


def adm(aid, stay_minutes=600, race="white", died=True, loc="none", admit=0):
    return Admission(aid, "p" + aid, admit, admit + stay_minutes, race, died, loc)


def note(aid, text, t=0, category="nursing"):
    return NoteRecord(aid, t, category, text)


def event(aid, item, value, t=0):
    return ChartEventRecord(aid, item, value, t)


def span(aid, start, end, treatment="ventilation"):
    return TreatmentSpanRecord(aid, treatment, start, end)


def sev(aid, oasis, sapsii=30.0):
    return SeverityRecord(aid, float(oasis), float(sapsii))


@pytest.fixture
def small_ds():
    return EhrDataset.build(
        admissions=[
            adm("a1", 7 * 60, "white"),
            adm("a2", 5 * 60, "white"),
            adm("a3", 10 * 60, "black", died=False, loc="snf"),
            adm("a4", 13 * 60, "white", died=False, loc="home"),
            adm("a5", 20 * 60, "other"),
        ],
        chart_events=[event("a1", "state", "alert"), event("a3", "riker-sas scale", "agitated")],
        notes=[note("a4", "pt is noncompliant with meds"), note("a5", "quiet night")],
        treatment_spans=[span("a1", 0, 100), span("a1", 500, 600)],
        severity=[sev(a, 10) for a in ("a1", "a2", "a3", "a4", "a5")],
    )


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
