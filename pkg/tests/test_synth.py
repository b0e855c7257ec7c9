from __future__ import annotations

import math

import numpy as np
import pytest

from eolmistrust.chart_features import feature_name
from eolmistrust.cohort import Cohort
from eolmistrust.data_model import load_dataset, write_dataset
from eolmistrust.noncompliance import label_noncompliance
from eolmistrust.synth import (
    ConfigError,
    SynthConfig,
    feature_definitions,
    generate,
    read_config,
    write_config,
    write_ground_truth,
)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def test_same_seed_gives_byte_identical_files(tmp_path):
    cfg = SynthConfig(n_admissions=300, seed=42)
    for sub in ("a", "b"):
        ds, truth = generate(cfg)
        write_dataset(ds, tmp_path / sub)
        write_ground_truth(truth, tmp_path / sub / "truth.csv")
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_different_seeds_differ():
    a, _ = generate(SynthConfig(n_admissions=100, seed=1))
    b, _ = generate(SynthConfig(n_admissions=100, seed=2))
    assert a != b


def test_round_trip_through_loader(tmp_path):
    ds, _ = generate(SynthConfig(n_admissions=400, seed=9))
    write_dataset(ds, tmp_path)
    back = load_dataset(tmp_path, strict=True)
    assert back == ds
    assert back.issues == ()


def test_flat_slope_gives_intercept_rate():
    cfg = SynthConfig(n_admissions=3000, noncompliance_slope=0.0, noncompliance_intercept=-1.5, seed=4)
    ds, truth = generate(cfg)
    p = 1 / (1 + math.exp(1.5))
    n = cfg.n_admissions
    labels = label_noncompliance(ds, Cohort.of("all", truth.latent))
    count = sum(labels.values())
    assert abs(count - n * p) <= 3 * math.sqrt(n * p * (1 - p))
    assert labels == truth.noncompliant


def test_feature_frequencies_match_link():
    cfg = SynthConfig(n_admissions=5000, seed=12)
    ds, truth = generate(cfg)
    adm = ds.admission_map()
    shift = np.array([cfg.latent_race_shift if adm[a].race == "black" else 0.0 for a in sorted(truth.latent)])
    # average the logistic link over the latent law with Gauss-Hermite quadrature
    nodes, weights = np.polynomial.hermite_e.hermegauss(60)
    weights = weights / weights.sum()
    seen = {}
    for e in ds.chart_events:
        seen.setdefault(feature_name(e.item_label, e.value_label), set()).add(e.admission_id)
    n = cfg.n_admissions
    for item, value, slope in feature_definitions(cfg):
        p_i = (_sigmoid(cfg.feature_intercept + slope * (shift[:, None] + nodes[None, :])) * weights).sum(axis=1)
        mean = p_i.sum()
        sd = math.sqrt((p_i * (1 - p_i)).sum())
        count = len(seen.get(feature_name(item, value), ()))
        assert abs(count - mean) <= 3 * sd, (item, value, count, mean, sd)


def test_latent_shift_and_high_latent_set():
    cfg = SynthConfig(n_admissions=4000, seed=1)
    ds, truth = generate(cfg)
    adm = ds.admission_map()
    black = [v for a, v in truth.latent.items() if adm[a].race == "black"]
    white = [v for a, v in truth.latent.items() if adm[a].race == "white"]
    assert np.mean(black) - np.mean(white) == pytest.approx(cfg.latent_race_shift, abs=0.15)
    assert truth.high_latent == {a for a, v in truth.latent.items() if v > cfg.high_latent_threshold}


def test_config_file_round_trip(tmp_path):
    cfg = SynthConfig(n_admissions=123, n_features=3, feature_slopes=(0.5, -1.25, 2.0), seed=2**63)
    write_config(cfg, tmp_path / "c.txt")
    assert read_config(tmp_path / "c.txt") == cfg


def test_config_file_comments_and_partial(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# small run\nn_admissions = 50\nseed=7  # fixed\n")
    assert read_config(p) == SynthConfig(n_admissions=50, seed=7)


@pytest.mark.parametrize(
    "body,match",
    [("bogus=1\n", "unknown key"), ("n_admissions\n", "key=value"), ("seed=abc\n", "bad value")],
)
def test_config_file_errors(tmp_path, body, match):
    p = tmp_path / "c.txt"
    p.write_text(body)
    with pytest.raises(ConfigError, match=match):
        read_config(p)


@pytest.mark.parametrize(
    "changes",
    [
        {"n_admissions": 1},
        {"black_fraction": 1.2},
        {"black_fraction": 0.7, "other_fraction": 0.5},
        {"disparity_multiplier": 0.5},
        {"n_features": 2, "feature_slopes": (1.0,)},
        {"severity_correlation": 1.5},
        {"seed": -1},
    ],
)
def test_invalid_config(changes):
    with pytest.raises(ConfigError):
        SynthConfig(**changes)


def test_severity_independent_of_latent_by_default():
    ds, truth = generate(SynthConfig(n_admissions=3000, seed=3))
    sev = ds.severity_map()
    ids = sorted(truth.latent)
    lat = [truth.latent[a] for a in ids]
    oasis = [sev[a].oasis for a in ids]
    saps = [sev[a].sapsii for a in ids]
    assert abs(np.corrcoef(lat, oasis)[0, 1]) < 0.06
    assert np.corrcoef(oasis, saps)[0, 1] == pytest.approx(0.7, abs=0.05)
