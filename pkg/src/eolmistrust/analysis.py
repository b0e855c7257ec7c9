"""Race-, trust- and severity-stratified disparity analysis and report assembly."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import chart_features, noncompliance, sentiment, sparse_logreg, stats, treatments
from .cohort import (
    EOL_MIN_STAY_MINUTES,
    NOTES_MIN_STAY_MINUTES,
    Cohort,
    build_eol_cohort,
    build_notes_population,
    split_by_race,
)
from .data_model import TREATMENTS, EhrDataset, dataset_summary


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class MistrustScore:
    admission_id: str
    score: float


@dataclass(frozen=True)
class Stratification:
    """Two disjoint groups; ``group_a`` is the black / low-trust / high-severity side."""

    name: str
    group_a: Cohort
    group_b: Cohort

    def __post_init__(self):
        if set(self.group_a.admission_ids) & set(self.group_b.admission_ids):
            raise AnalysisError(f"stratification {self.name!r}: groups overlap")

    @property
    def sizes(self) -> tuple[int, int]:
        return len(self.group_a), len(self.group_b)


def _score_items(scores) -> list[tuple[str, float]]:
    if isinstance(scores, Mapping):
        return [(aid, float(s)) for aid, s in scores.items()]
    return [(s.admission_id, float(s.score)) for s in scores]


def _rank_split(items: list[tuple[str, float]], k: int, name: str, labels: tuple[str, str]) -> Stratification:
    if not 1 <= k < len(items):
        raise AnalysisError(f"group size {k} out of range for {len(items)} admissions")
    ranked = sorted(items, key=lambda p: (-p[1], p[0]))
    top = [aid for aid, _ in ranked[:k]]
    rest = [aid for aid, _ in ranked[k:]]
    return Stratification(name, Cohort.of(labels[0], top), Cohort.of(labels[1], rest))


def stratify_by_score(scores, k_low_trust: int) -> Stratification:
    """The ``k_low_trust`` highest mistrust scores against the rest.

    Ties are broken by admission id, so the split does not depend on input order.
    """
    return _rank_split(_score_items(scores), k_low_trust, "trust", ("low_trust", "high_trust"))


def race_stratification(ds: EhrDataset, cohort: Cohort) -> Stratification:
    white, black = split_by_race(cohort, ds)
    return Stratification("race", Cohort.of("black", black), Cohort.of("white", white))


def severity_strata(ds: EhrDataset, cohort: Cohort, n_high: int, n_low: int | None = None) -> Stratification:
    """Top ``n_high`` OASIS admissions against the rest of the cohort."""
    sev = ds.severity_map()
    missing = [aid for aid in cohort.admission_ids if aid not in sev]
    if missing:
        raise AnalysisError(f"missing severity for admissions: {', '.join(missing[:20])}")
    if n_low is not None and n_high + n_low != len(cohort):
        raise AnalysisError(f"sizes ({n_high}, {n_low}) do not cover a cohort of {len(cohort)}")
    items = [(aid, sev[aid].oasis) for aid in cohort.admission_ids]
    return _rank_split(items, n_high, "severity", ("high_severity", "low_severity"))


def _compare(a: Sequence[float], b: Sequence[float], exact_max_n: int) -> dict:
    method = "exact" if len(a) + len(b) <= exact_max_n else "approx"
    mw = stats.mann_whitney(a, b, method=method)
    ma, mb = stats.median(a), stats.median(b)
    return {
        "n_a": len(a),
        "n_b": len(b),
        "median_a": ma,
        "median_b": mb,
        "median_gap": ma - mb,
        "mann_whitney": mw.as_dict(),
    }


def treatment_disparity(
    ds: EhrDataset,
    strat: Stratification,
    treatment: str,
    max_gap: int = treatments.MERGE_GAP_MINUTES,
    count_gaps: bool = True,
    exact_max_n: int = stats.EXACT_MAX_N,
) -> dict:
    """Median durations, gap ``a - b``, Mann-Whitney and ECDFs over treated admissions."""
    section = {"stratification": strat.name, "treatment": treatment,
               "group_a": strat.group_a.name, "group_b": strat.group_b.name}
    samples = []
    for group in (strat.group_a, strat.group_b):
        d = treatments.durations_for_cohort(ds, group, treatment, max_gap, count_gaps)
        if not d:
            raise AnalysisError(f"group {group.name!r} has no {treatment} patients")
        samples.append([float(d[aid]) for aid in sorted(d)])
    section.update(_compare(samples[0], samples[1], exact_max_n))
    section["ecdf_a"] = stats.ecdf(samples[0]).as_dict()
    section["ecdf_b"] = stats.ecdf(samples[1]).as_dict()
    return section


def correlation_report(ds: EhrDataset, cohort: Cohort, scores) -> dict:
    """Pearson matrix over (oasis, sapsii, mistrust) for the cohort."""
    sev = ds.severity_map()
    sc = dict(_score_items(scores))
    missing = [aid for aid in cohort.admission_ids if aid not in sev or aid not in sc]
    if missing:
        raise AnalysisError(f"missing severity or mistrust for: {', '.join(missing[:20])}")
    cols = {
        "oasis": [sev[a].oasis for a in cohort.admission_ids],
        "sapsii": [sev[a].sapsii for a in cohort.admission_ids],
        "mistrust": [sc[a] for a in cohort.admission_ids],
    }
    labels = list(cols)
    m = [[1.0] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(i + 1, 3):
            try:
                r = stats.pearson(cols[labels[i]], cols[labels[j]])
            except ValueError:
                raise AnalysisError(f"correlation undefined: constant column among {labels[i]}, {labels[j]}") from None
            m[i][j] = m[j][i] = r
    return {"labels": labels, "matrix": m, "n": len(cohort)}


# -- full pipeline ---------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    C: float = sparse_logreg.DEFAULT_C
    tol: float = sparse_logreg.DEFAULT_TOL
    max_iter: int = sparse_logreg.DEFAULT_MAX_ITER
    class_weight: str | None = None
    patterns: tuple[str, ...] = noncompliance.DEFAULT_PATTERNS
    whitelist: tuple[str, ...] | None = tuple(sorted(chart_features.DEFAULT_WHITELIST))
    eol_min_stay: int = EOL_MIN_STAY_MINUTES
    notes_min_stay: int = NOTES_MIN_STAY_MINUTES
    include_snf: bool = True
    merge_gap: int = treatments.MERGE_GAP_MINUTES
    count_gaps: bool = True
    exact_max_n: int = stats.EXACT_MAX_N
    treatments: tuple[str, ...] = TREATMENTS
    strata: tuple[str, ...] = ("race", "trust", "severity")
    sentiment_population: str = "eol"
    top_k: int = 3


@dataclass(frozen=True)
class TrainedModel:
    model: sparse_logreg.MistrustModel
    population: Cohort
    labels: dict[str, bool]


def train_model(ds: EhrDataset, config: PipelineConfig = PipelineConfig()) -> TrainedModel:
    """Fit the mistrust model on the notes population against noncompliance labels."""
    population = build_notes_population(ds, config.notes_min_stay)
    labels = noncompliance.label_noncompliance(ds, population, config.patterns)
    vocab = chart_features.build_vocabulary(ds, config.whitelist)
    fm = chart_features.encode(ds, population, vocab)
    model = sparse_logreg.fit(
        fm, labels, C=config.C, tol=config.tol, max_iter=config.max_iter,
        class_weight=config.class_weight,
    )
    return TrainedModel(model, population, labels)


def score_admissions(ds: EhrDataset, model: sparse_logreg.MistrustModel, cohort: Cohort | None = None) -> dict[str, float]:
    cohort = cohort or Cohort.of("all", (a.admission_id for a in ds.admissions))
    vocab = chart_features.FeatureVocabulary(model.feature_names)
    return sparse_logreg.score(model, chart_features.encode(ds, cohort, vocab))


@dataclass
class DisparityReport:
    summary: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    mistrust_by_race: dict = field(default_factory=dict)
    treatments: dict = field(default_factory=dict)
    sentiment: dict = field(default_factory=dict)
    correlation: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DisparityReport":
        return cls(**json.loads(text))

    def p_values(self) -> Iterable[float]:
        def walk(obj):
            if isinstance(obj, dict):
                for k, v in obj.items():
                    if k == "p_two_sided":
                        yield v
                    else:
                        yield from walk(v)
        yield from walk(asdict(self))


def analyze(
    ds: EhrDataset,
    scores: Mapping[str, float],
    config: PipelineConfig = PipelineConfig(),
    model: sparse_logreg.MistrustModel | None = None,
    lexicon: Mapping[str, float] | None = None,
    labels: Mapping[str, bool] | None = None,
) -> DisparityReport:
    """Assemble every disparity comparison for the end-of-life cohort."""
    eol = build_eol_cohort(ds, config.eol_min_stay, config.include_snf)
    missing = [aid for aid in eol.admission_ids if aid not in scores]
    if missing:
        raise AnalysisError(f"no mistrust score for EOL admissions: {', '.join(missing[:20])}")
    race = race_stratification(ds, eol)
    notes_pop = build_notes_population(ds, config.notes_min_stay)
    report = DisparityReport()

    report.summary = {
        "dataset": dataset_summary(ds).as_dict(),
        "eol_cohort": len(eol),
        "eol_white": len(race.group_b),
        "eol_black": len(race.group_a),
        "notes_population": len(notes_pop),
    }
    if labels is not None:
        report.summary["noncompliant"] = int(sum(bool(v) for v in labels.values()))
    if model is not None:
        report.model = {
            "C": model.C,
            "intercept": model.intercept,
            "n_features": len(model.feature_names),
            "n_nonzero": int(np.count_nonzero(model.weights)),
            "iterations": model.iterations,
            "converged": model.converged,
            "objective": model.objective if math.isfinite(model.objective) else None,
            "top_features": [
                {"feature": f, "weight": w} for f, w in sparse_logreg.top_features(model, config.top_k)
            ],
        }

    report.mistrust_by_race = _compare(
        [scores[a] for a in race.group_a.admission_ids],
        [scores[a] for a in race.group_b.admission_ids],
        config.exact_max_n,
    ) if len(race.group_a) and len(race.group_b) else {}

    for treatment in config.treatments:
        treated = treatments.durations_for_cohort(ds, eol, treatment, config.merge_gap, config.count_gaps)
        treated_cohort = Cohort.of(f"eol_{treatment}", treated)
        t_race = race_stratification(ds, treated_cohort)
        section = {}
        for kind in config.strata:
            if kind == "race":
                strat = t_race
            elif kind == "trust":
                strat = stratify_by_score({a: scores[a] for a in treated}, len(t_race.group_a))
            elif kind == "severity":
                strat = severity_strata(ds, treated_cohort, len(t_race.group_a))
            else:
                raise AnalysisError(f"unknown stratification {kind!r}")
            section[kind] = treatment_disparity(
                ds, strat, treatment, config.merge_gap, config.count_gaps, config.exact_max_n
            )
        report.treatments[treatment] = section

    lexicon = lexicon if lexicon is not None else sentiment.load_lexicon()
    base = eol if config.sentiment_population == "eol" else notes_pop
    with_notes = {n.admission_id for n in ds.notes}
    adm = ds.admission_map()
    sent_pop = Cohort.of(
        f"{base.name}_sentiment",
        (a for a in base.admission_ids if a in with_notes and adm[a].race != "other"),
    )
    sent_scores = sentiment.score_population(ds, sent_pop, lexicon)
    norm = {s.admission_id: s.normalized for s in sent_scores}
    s_race = race_stratification(ds, sent_pop)
    sent = {"population": len(sent_pop), "median_all": stats.median(list(norm.values()))}
    for kind in config.strata:
        if kind == "race":
            strat = s_race
        elif kind == "trust":
            strat = stratify_by_score({a: scores[a] for a in sent_pop.admission_ids}, len(s_race.group_a))
        else:
            strat = severity_strata(ds, sent_pop, len(s_race.group_a))
        sec = _compare(
            [norm[a] for a in strat.group_a.admission_ids],
            [norm[a] for a in strat.group_b.admission_ids],
            config.exact_max_n,
        )
        sec.update(group_a=strat.group_a.name, group_b=strat.group_b.name)
        sent[kind] = sec
    report.sentiment = sent

    report.correlation = correlation_report(ds, eol, scores)
    return report


def run_pipeline(ds: EhrDataset, config: PipelineConfig = PipelineConfig(), lexicon=None):
    """Train, score and analyze in one pass; returns ``(report, trained, scores)``."""
    trained = train_model(ds, config)
    scores = score_admissions(ds, trained.model)
    report = analyze(ds, scores, config, trained.model, lexicon, trained.labels)
    return report, trained, scores


# -- outputs ---------------------------------------------------------------


def write_scores(scores: Mapping[str, float], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("admission_id", "score"))
        for aid in sorted(scores):
            w.writerow((aid, repr(float(scores[aid]))))


def read_scores(path: str | os.PathLike) -> dict[str, float]:
    with open(path, newline="", encoding="utf-8") as fh:
        out = {}
        for r in csv.DictReader(fh):
            v = float(r["score"])
            if not 0.0 <= v <= 1.0:
                raise AnalysisError(f"{path}: score {v} for {r['admission_id']} outside [0, 1]")
            out[r["admission_id"]] = v
        return out


def ecdf_svg(
    curve_a: Mapping,
    curve_b: Mapping,
    label_a: str,
    label_b: str,
    median_a: float,
    median_b: float,
    title: str,
    width: int = 480,
    height: int = 320,
) -> str:
    """Two ECDF step curves with dotted median markers as a standalone SVG."""
    pad_l, pad_r, pad_t, pad_b = 50, 20, 30, 40
    xs = list(curve_a["values"]) + list(curve_b["values"])
    x_max = max(xs) if xs and max(xs) > 0 else 1.0
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def px(v):
        return pad_l + pw * v / x_max

    def py(f):
        return pad_t + ph * (1.0 - f)

    def steps(curve):
        pts = [(px(0.0), py(0.0))]
        prev = 0.0
        for v, f in zip(curve["values"], curve["fractions"]):
            pts.append((px(v), py(prev)))
            pts.append((px(v), py(f)))
            prev = f
        pts.append((px(x_max), py(prev)))
        return " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)

    colors = ("#c0392b", "#2471a3")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="18" text-anchor="middle" font-family="sans-serif" '
        f'font-size="13">{_esc(title)}</text>',
        f'<line x1="{pad_l}" y1="{py(0):.2f}" x2="{pad_l + pw}" y2="{py(0):.2f}" stroke="black"/>',
        f'<line x1="{pad_l}" y1="{py(0):.2f}" x2="{pad_l}" y2="{py(1):.2f}" stroke="black"/>',
        f'<text x="{pad_l + pw / 2:.0f}" y="{height - 8}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="11">minutes (max {x_max:.0f})</text>',
        f'<text x="12" y="{pad_t + ph / 2:.0f}" font-family="sans-serif" font-size="11" '
        f'transform="rotate(-90 12 {pad_t + ph / 2:.0f})" text-anchor="middle">CDF</text>',
    ]
    for curve, med, color, label, row in (
        (curve_a, median_a, colors[0], label_a, 0),
        (curve_b, median_b, colors[1], label_b, 1),
    ):
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{steps(curve)}"/>')
        parts.append(
            f'<line x1="{px(med):.2f}" y1="{py(0):.2f}" x2="{px(med):.2f}" y2="{py(1):.2f}" '
            f'stroke="{color}" stroke-dasharray="3,3"/>'
        )
        parts.append(
            f'<text x="{pad_l + pw - 4}" y="{py(0.2) + 14 * row:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="{color}">'
            f'{_esc(label)} (n={curve["n"]}, median={med:.0f})</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_report(report: DisparityReport, out_dir: str | os.PathLike) -> list[str]:
    """Write report.json, flat CSVs and one SVG per treatment comparison."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name, text):
        (out / name).write_text(text, encoding="utf-8")
        written.append(name)

    emit("report.json", report.to_json())

    rows = [("treatment", "stratification", "group_a", "group_b", "n_a", "n_b",
             "median_a", "median_b", "median_gap", "u_statistic", "p_two_sided", "method")]
    for treatment, sections in sorted(report.treatments.items()):
        for kind, s in sorted(sections.items()):
            mw = s["mann_whitney"]
            rows.append((treatment, kind, s["group_a"], s["group_b"], s["n_a"], s["n_b"],
                         repr(s["median_a"]), repr(s["median_b"]), repr(s["median_gap"]),
                         repr(mw["u_statistic"]), repr(mw["p_two_sided"]), mw["method"]))
            for side in ("a", "b"):
                curve = s[f"ecdf_{side}"]
                emit(f"ecdf_{treatment}_{kind}_{side}.csv", _csv(
                    [("value", "fraction")] + [(repr(v), repr(f)) for v, f in zip(curve["values"], curve["fractions"])]
                ))
            emit(f"cdf_{treatment}_{kind}.svg", ecdf_svg(
                s["ecdf_a"], s["ecdf_b"], s["group_a"], s["group_b"], s["median_a"], s["median_b"],
                f"{treatment} duration by {kind} (p={mw['p_two_sided']:.3g})",
            ))
    emit("treatments.csv", _csv(rows))

    rows = [("stratification", "group_a", "group_b", "n_a", "n_b", "median_a", "median_b", "p_two_sided")]
    for kind in sorted(k for k in report.sentiment if isinstance(report.sentiment[k], dict)):
        s = report.sentiment[kind]
        rows.append((kind, s["group_a"], s["group_b"], s["n_a"], s["n_b"], repr(s["median_a"]),
                     repr(s["median_b"]), repr(s["mann_whitney"]["p_two_sided"])))
    emit("sentiment.csv", _csv(rows))

    if report.correlation:
        labels = report.correlation["labels"]
        rows = [("",) + tuple(labels)] + [
            (labels[i],) + tuple(repr(v) for v in row) for i, row in enumerate(report.correlation["matrix"])
        ]
        emit("correlation.csv", _csv(rows))
    if report.model:
        emit("top_features.csv", _csv(
            [("feature", "weight")] + [(t["feature"], repr(t["weight"])) for t in report.model["top_features"]]
        ))
    return written


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()
