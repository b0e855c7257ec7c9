"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line; ``conftest.py`` prints them in the
terminal summary so a plain ``pytest -v`` run shows the verdicts.
"""

from __future__ import annotations

import contextlib
import itertools
import random
import time

import numpy as np
import pytest

from oracles import finite_difference_grad, golden_section, mann_whitney_enumerated, merge_by_extension, random_span_sets
from eolmistrust.analysis import run_pipeline
from eolmistrust.cli import main
from eolmistrust.sentiment import load_lexicon, score_text, tokenize
from eolmistrust.sparse_logreg import fit, lambda_max, objective, smooth_loss
from eolmistrust.stats import mann_whitney, zscore
from eolmistrust.synth import SynthConfig, generate
from eolmistrust.treatments import merge_spans, total_duration

RESULTS: list[str] = []
TREATMENTS = ("ventilation", "vasopressor")


@contextlib.contextmanager
def criterion(name):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        RESULTS.append(f"FAIL  {name}  ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})")
        raise
    RESULTS.append(f"PASS  {name}  ({time.perf_counter() - start:.1f} s)")


@pytest.fixture(scope="module")
def hundred_runs():
    """Default-config pipeline reports for seeds 0..99."""
    start = time.perf_counter()
    reports = [run_pipeline(generate(SynthConfig(seed=s))[0])[0] for s in range(100)]
    return reports, time.perf_counter() - start


def test_mann_whitney_exactness():
    with criterion("Mann-Whitney exactness"):
        start = time.perf_counter()
        rng = random.Random(2024)
        worst = 0.0
        for _ in range(200):
            n1, n2 = rng.randint(1, 6), rng.randint(1, 6)
            a = [rng.randint(0, 3) for _ in range(n1)]
            b = [rng.randint(0, 3) for _ in range(n2)]
            if len(set(a + b)) == len(a + b):
                b[0] = a[0]  # force a tie
            worst = max(worst, abs(mann_whitney(a, b, "exact").p_two_sided - mann_whitney_enumerated(a, b)))
        assert worst <= 1e-12, worst
        for _ in range(50):
            a = [rng.randint(0, 40) for _ in range(10)]
            b = [rng.randint(5, 45) for _ in range(10)]
            diff = abs(mann_whitney(a, b, "approx").p_two_sided - mann_whitney(a, b, "exact").p_two_sided)
            assert diff <= 0.02, (a, b, diff)
        assert time.perf_counter() - start < 10.0


def _problem(rng, n=50, d=6):
    X = (rng.random((n, d)) < 0.35).astype(float)
    y = (rng.random(n) < 1 / (1 + np.exp(-(X @ rng.normal(0, 2, d) - 0.7)))).astype(float)
    y[:2] = (0, 1)
    return X, y


def test_solver_correctness():
    with criterion("Solver correctness"):
        rng = np.random.default_rng(7)
        for _ in range(20):
            X, y = _problem(rng)
            v = rng.normal(0, 1.5, X.shape[1] + 1)
            _, gw, gb = smooth_loss(v[:-1], v[-1], X, y)
            analytic = np.append(gw, gb)
            numeric = finite_difference_grad(lambda u: smooth_loss(u[:-1], u[-1], X, y)[0], v)
            assert np.linalg.norm(analytic - numeric) <= 1e-6 * max(1.0, np.linalg.norm(analytic))
        for _ in range(50):
            X, y = _problem(rng, n=int(rng.integers(20, 120)), d=int(rng.integers(2, 15)))
            h = np.array(fit(X, y, C=float(rng.uniform(0.05, 5.0))).history)
            assert np.all(np.diff(h) <= 1e-12 * np.abs(h[:-1]))
        for _ in range(10):
            X, y = _problem(rng)
            m = fit(X, y, C=1.0 / (lambda_max(X, y) * (1 + 1e-9)))
            assert np.all(m.weights == 0.0)
        # feature equal to label; the intercept is pinned since it would run off to -inf
        y = np.array([1, 0, 1, 1, 0, 0, 1, 0, 0, 0], dtype=float)
        X = y[:, None]
        w_star = golden_section(lambda w: objective([w], 0.0, X, y, 10.0), -10.0, 30.0)
        assert abs(fit(X, y, C=10.0, tol=1e-12, fit_intercept=False).weights[0] - w_star) <= 1e-4
        # noisy copy with a free intercept, minimized by profiling b out
        for seed in range(5):
            r = np.random.default_rng(seed)
            y = (r.random(40) < 0.4).astype(float)
            y[:2] = (0, 1)
            X = np.where(r.random(40) < 0.8, y, 1 - y)[:, None]

            def profile(w):
                b = golden_section(lambda b: objective([w], b, X, y, 10.0), -20, 20, 1e-11)
                return objective([w], b, X, y, 10.0)

            w_star = golden_section(profile, -20.0, 20.0, 1e-9)
            assert abs(fit(X, y, C=10.0, tol=1e-13).weights[0] - w_star) <= 1e-4


def test_span_merging():
    with criterion("Span merging"):
        assert merge_spans([(0, 100), (500, 600)]) == [(0, 600)]
        assert merge_spans([(0, 120)]) == [(0, 120)]
        assert merge_spans([(0, 60), (700, 760)]) == [(0, 60), (700, 760)]
        assert total_duration([]) == 0
        assert total_duration([(0, 600)]) == 600
        assert total_duration([(0, 60), (700, 760)]) == 120
        assert merge_spans([(0, 10), (610, 620)]) == [(0, 620)]
        assert merge_spans([(0, 10), (611, 620)]) == [(0, 10), (611, 620)]
        rng = random.Random(99)
        for spans in random_span_sets(rng):
            merged = merge_spans(spans)
            assert merged == merge_by_extension(spans, 600)
            assert merge_spans(merged) == merged
            for perm in itertools.islice(itertools.permutations(spans), 3):
                assert merge_spans(list(perm)) == merged
            shuffled = list(spans)
            rng.shuffle(shuffled)
            assert merge_spans(shuffled) == merged
            assert all(s2 - e1 > 600 for (_, e1), (s2, _) in zip(merged, merged[1:]))


def test_end_to_end_disparity_recovery():
    with criterion("End-to-end disparity recovery"):
        start = time.perf_counter()
        report = run_pipeline(generate(SynthConfig(n_admissions=2000, disparity_multiplier=2.0, seed=0))[0])[0]
        for t in TREATMENTS:
            s = report.treatments[t]["trust"]
            ratio = s["median_a"] / s["median_b"]
            assert 1.6 <= ratio <= 2.4, (t, ratio)
            assert s["mann_whitney"]["p_two_sided"] < 0.01, (t, s["mann_whitney"])
        rejections = {(t, k): 0 for t in TREATMENTS for k in ("race", "trust")}
        null = SynthConfig(n_admissions=2000, disparity_multiplier=1.0, latent_race_shift=0.0)
        for seed in range(100):
            rep = run_pipeline(generate(null.replace(seed=1000 + seed))[0])[0]
            for t, k in rejections:
                rejections[t, k] += rep.treatments[t][k]["mann_whitney"]["p_two_sided"] < 0.01
        assert max(rejections.values()) <= 5, rejections
        assert time.perf_counter() - start < 60.0


def test_qualitative_replication(hundred_runs):
    with criterion("Qualitative replication (trust gap >= race gap)"):
        reports, _ = hundred_runs
        wins = sum(
            all(r.treatments[t]["trust"]["median_gap"] >= r.treatments[t]["race"]["median_gap"] for t in TREATMENTS)
            for r in reports
        )
        assert wins >= 95, wins


def test_severity_independence(hundred_runs):
    with criterion("Severity independence"):
        reports, _ = hundred_runs
        labels = reports[0].correlation["labels"]
        i, j, k = labels.index("oasis"), labels.index("sapsii"), labels.index("mistrust")
        independent = sum(abs(r.correlation["matrix"][i][k]) <= 0.1 for r in reports)
        assert independent >= 95, independent
        recovered = sum(abs(r.correlation["matrix"][i][j] - 0.7) <= 0.05 for r in reports)
        assert recovered >= 95, recovered


def test_sentiment_normalization():
    with criterion("Sentiment normalization"):
        rng = np.random.default_rng(1)
        for n in (2, 3, 50, 1000, 10_000):
            z = zscore(rng.normal(rng.uniform(-1, 1), rng.uniform(1e-3, 1), n))
            assert abs(z.mean()) <= 1e-12
            assert abs(z.var() - 1.0) <= 1e-9
        report = run_pipeline(generate(SynthConfig(n_admissions=600, seed=8))[0])[0]
        assert report.sentiment["population"] > 0
        lexicon = load_lexicon()
        words = sorted(lexicon)[:40]
        corpus = ["Date:[**5-1-18**]", ":[**2101-3-4**]:", "[** **]", "[**Hospital 1**]"]
        corpus += [f"seen by [**Dr. {w.title()}**] on [**{w} ward**]" for w in words]
        corpus += [f"[**{a} {b}\n{a}**]" for a, b in zip(words, reversed(words))]
        for text in corpus:
            assert not any(t in lexicon for t in tokenize(text)), text
            assert score_text(text, lexicon) == 0.0


def test_determinism(tmp_path):
    with criterion("Determinism of report.json"):
        data = tmp_path / "data"
        assert main(["synth", str(data), "--seed", "21", "--n", "2000"]) == 0
        for sub in ("a", "b"):
            assert main(["run", str(data), "--out", str(tmp_path / sub)]) == 0
        assert (tmp_path / "a/report.json").read_bytes() == (tmp_path / "b/report.json").read_bytes()
