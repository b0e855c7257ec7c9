"""Seeded synthetic EHR extracts with a known latent mistrust per admission.

Every admission gets a latent mistrust ``m ~ N(0, 1) + shift * [black]``.
Chart-event indicators, the noncompliance note, note sentiment words and
treatment durations are all sampled conditionally on ``m``:

* indicator j is present with probability ``sigmoid(a + s_j * m)``;
* a noncompliance sentence appears with probability
  ``sigmoid(noncompliance_intercept + noncompliance_slope * m)``;
* each injected sentiment word is positive with probability
  ``sigmoid(-sentiment_slope * m)``;
* a treatment course lasts ``exp(N(mu, sigma))`` minutes, times
  ``disparity_multiplier`` when ``m > high_latent_threshold``.

OASIS and SAPS II are bivariate normal with correlation
``severity_correlation`` and, by default, independent of ``m``. Each
component draws from its own child of the seed so changing one link does not
reshuffle the others.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data_model import (
    Admission,
    ChartEventRecord,
    EhrDataset,
    NoteRecord,
    SeverityRecord,
    TreatmentSpanRecord,
    parse_time,
)
from .sparse_logreg import sigmoid

# (item, value, direction of association with mistrust)
FEATURE_POOL = (
    ("state", "alert", -1),
    ("riker-sas scale", "agitated", +1),
    ("pain", "none", -1),
    ("richmond-ras scale", "0 alert and calm", -1),
    ("education readiness", "no", +1),
    ("pain level", "7-mod to severe", +1),
    ("family communication", "family meeting held", -1),
    ("restraint device", "soft limb", +1),
    ("code status", "full code", +1),
    ("code status", "dnr / dni", -1),
    ("healthcare proxy", "yes", -1),
    ("support systems", "family", -1),
    ("bath", "assisted", 0),
    ("education barrier", "language", +1),
    ("riker-sas scale", "calm/cooperative", -1),
    ("richmond-ras scale", "+2 agitated", +1),
    ("pain management", "pca", 0),
    ("behavior", "cooperative", -1),
    ("behavior", "combative", +1),
    ("orientation", "oriented x3", -1),
    ("mental status", "confused", +1),
    ("spiritual support", "chaplain visit", 0),
    ("family meeting", "yes", -1),
    ("education response", "verbalized understanding", -1),
    ("education response", "refused teaching", +1),
    ("pain present", "yes", +1),
    ("restraints evaluated", "yes", +1),
    ("support systems", "social worker", 0),
    ("education readiness", "yes", -1),
    ("pain assess method", "verbal", 0),
)

# chart items outside the interpersonal whitelist
NOISE_EVENTS = (("heart rhythm", "sinus rhythm"), ("skin color", "pale"), ("iv site", "clean"))

POSITIVE_WORDS = ("calm", "comfortable", "cooperative", "pleasant", "grateful", "stable",
                  "appreciative", "resting", "improving", "supportive")
NEGATIVE_WORDS = ("agitated", "angry", "upset", "refusing", "combative", "anxious",
                  "frustrated", "uncooperative", "distressed", "hostile")

SENTENCES = (
    "Pt seen on rounds [**{date}**].",
    "Family updated by phone.",
    "Plan discussed with team.",
    "VS as per flowsheet.",
    "Will continue to monitor overnight.",
    "Labs sent at [**{time}**].",
    "Date:[**{short}**] reviewed with RN.",
    "Skin intact, turned q2h.",
)
SENTIMENT_SENTENCES = (
    "Pt {word} this shift.",
    "Patient appeared {word} during care.",
    "Family visited, pt {word}.",
    "Remains {word} with nursing.",
)
NONCOMPLIANT_SENTENCES = (
    "Pt noncompliant with medications at home.",
    "Documented as non-compliant with follow-up appointments.",
    "History of noncompliance with dialysis regimen.",
)
DECOY_SENTENCES = ("Patient compliant with regimen.", "Reviewed medication compliance.")
NOTE_CATEGORIES = ("nursing", "nursing", "nursing", "physician", "discharge summary", "social work")

_BASE_TIME = parse_time("2101-01-01 00:00:00")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_admissions: int = 2000
    black_fraction: float = 0.2
    other_fraction: float = 0.05
    latent_race_shift: float = 0.5
    noncompliance_intercept: float = -2.0
    noncompliance_slope: float = 2.5
    ventilation_rate: float = 0.6
    ventilation_log_mean: float = 7.6
    ventilation_log_sigma: float = 0.5
    vasopressor_rate: float = 0.45
    vasopressor_log_mean: float = 7.0
    vasopressor_log_sigma: float = 0.5
    disparity_multiplier: float = 2.0
    high_latent_threshold: float = 0.8
    split_span_rate: float = 0.3
    n_features: int = 30
    feature_intercept: float = -0.5
    feature_slope_scale: float = 2.5
    feature_slopes: tuple[float, ...] = ()
    lexicon_injection_rate: float = 0.6
    sentiment_slope: float = 1.0
    oasis_mean: float = 32.0
    oasis_sd: float = 8.0
    sapsii_mean: float = 40.0
    sapsii_sd: float = 14.0
    severity_correlation: float = 0.7
    severity_latent_correlation: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_admissions < 2:
            raise ConfigError("n_admissions must be >= 2")
        for name in ("black_fraction", "other_fraction", "ventilation_rate", "vasopressor_rate",
                     "split_span_rate", "lexicon_injection_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.black_fraction + self.other_fraction > 1.0:
            raise ConfigError("black_fraction + other_fraction must be <= 1")
        if self.disparity_multiplier < 1.0:
            raise ConfigError("disparity_multiplier must be >= 1")
        if self.n_features < 1:
            raise ConfigError("n_features must be >= 1")
        if self.feature_slopes and len(self.feature_slopes) != self.n_features:
            raise ConfigError("feature_slopes must list one slope per feature")
        for name in ("severity_correlation", "severity_latent_correlation"):
            if not -1.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must be in [-1, 1]")
        if self.ventilation_log_sigma < 0 or self.vasopressor_log_sigma < 0:
            raise ConfigError("log sigmas must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def replace(self, **changes) -> "SynthConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class GroundTruth:
    latent: dict[str, float]
    noncompliant: dict[str, bool]
    high_latent: frozenset[str] = field(default_factory=frozenset)


def feature_definitions(config: SynthConfig) -> list[tuple[str, str, float]]:
    """``(item, value, slope)`` for each generated indicator."""
    out = []
    for j in range(config.n_features):
        if j < len(FEATURE_POOL):
            item, value, sign = FEATURE_POOL[j]
        else:
            item, value, sign = "family communication", f"contact {j}", (-1, 0, 1)[j % 3]
        magnitude = 0.4 + 0.6 * ((7 * j) % 10) / 9.0
        out.append((item, value, sign * magnitude * config.feature_slope_scale))
    if config.feature_slopes:
        out = [(i, v, float(s)) for (i, v, _), s in zip(out, config.feature_slopes)]
    return out


def analytic_median(config: SynthConfig, treatment: str, high_latent: bool) -> float:
    """Population median duration of one unsplit course for a latent class."""
    mu = getattr(config, f"{treatment}_log_mean")
    return math.exp(mu) * (config.disparity_multiplier if high_latent else 1.0)


def _streams(seed: int) -> dict[str, np.random.Generator]:
    names = ("demographics", "features", "labels", "notes", "treatments", "severity")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {n: np.random.Generator(np.random.PCG64(c)) for n, c in zip(names, children)}


def _fmt(minutes: int) -> str:
    # loose date strings inside de-identification brackets
    days = minutes // 1440
    return f"{2101 + days // 365}-{1 + (days // 28) % 12}-{1 + days % 28}"


def generate(config: SynthConfig) -> tuple[EhrDataset, GroundTruth]:
    """Draw a synthetic dataset and its latent ground truth."""
    n = config.n_admissions
    rng = _streams(config.seed)
    width = max(6, len(str(n)))
    ids = [f"A{i:0{width}d}" for i in range(1, n + 1)]

    # demographics, latent and disposition
    g = rng["demographics"]
    u = g.random(n)
    race = np.where(u < config.black_fraction, "black",
                    np.where(u < config.black_fraction + config.other_fraction, "other", "white"))
    base_latent = g.standard_normal(n)
    latent = base_latent + config.latent_race_shift * (race == "black")
    died = g.random(n) < 0.45
    loc = g.choice(["hospice", "snf", "home", "other"], size=n, p=[0.25, 0.35, 0.3, 0.1])
    admit = _BASE_TIME + g.integers(0, 365 * 10, n) * 1440 + g.integers(0, 1440, n)
    short = g.random(n) < 0.04
    stay = np.where(short, g.integers(60, 360, n), 360 + np.round(g.lognormal(8.0, 0.6, n)))
    stay = stay.astype(np.int64)

    # treatment courses, possibly recorded as two back-to-back spans
    g = rng["treatments"]
    high = latent > config.high_latent_threshold
    spans = []
    for treatment in ("ventilation", "vasopressor"):
        rate = getattr(config, f"{treatment}_rate")
        mu = getattr(config, f"{treatment}_log_mean")
        sigma = getattr(config, f"{treatment}_log_sigma")
        treated = g.random(n) < rate
        dur = np.exp(mu + sigma * g.standard_normal(n))
        dur = np.maximum(np.round(dur * np.where(high, config.disparity_multiplier, 1.0)), 30).astype(np.int64)
        offset = g.integers(0, 720, n)
        split = g.random(n) < config.split_span_rate
        cut = g.random(n)
        gap = g.integers(30, 481, n)
        for i in np.flatnonzero(treated):
            start = int(admit[i] + offset[i])
            end = start + int(dur[i])
            first = int(cut[i] * (dur[i] - gap[i]))
            if split[i] and first > 0 and dur[i] > gap[i] + first:
                spans.append(TreatmentSpanRecord(ids[i], treatment, start, start + first))
                spans.append(TreatmentSpanRecord(ids[i], treatment, start + first + int(gap[i]), end))
            else:
                spans.append(TreatmentSpanRecord(ids[i], treatment, start, end))
            # the stay has to contain the course
            stay[i] = max(stay[i], end - admit[i] + 60)

    admissions = [
        Admission(ids[i], f"P{i + 1:0{width}d}", int(admit[i]), int(admit[i] + stay[i]),
                  str(race[i]), bool(died[i]), "none" if died[i] else str(loc[i]))
        for i in range(n)
    ]

    # chart-event indicators
    g = rng["features"]
    defs = feature_definitions(config)
    slopes = np.array([d[2] for d in defs])
    probs = sigmoid(config.feature_intercept + np.outer(latent, slopes))
    present = g.random(probs.shape) < probs
    repeats = g.integers(1, 4, probs.shape)
    event_frac = g.random((n, len(defs), 3))
    noise_present = g.random((n, len(NOISE_EVENTS))) < 0.5
    ii, jj, rr = np.nonzero(present[:, :, None] & (np.arange(3) < repeats[:, :, None]))
    times = admit[ii] + (event_frac[ii, jj, rr] * stay[ii]).astype(np.int64)
    events = [
        ChartEventRecord(ids[i], defs[j][0], defs[j][1], t)
        for i, j, t in zip(ii.tolist(), jj.tolist(), times.tolist())
    ]
    ii, jj = np.nonzero(noise_present)
    times = admit[ii] + stay[ii] // 2
    events += [
        ChartEventRecord(ids[i], NOISE_EVENTS[j][0], NOISE_EVENTS[j][1], t)
        for i, j, t in zip(ii.tolist(), jj.tolist(), times.tolist())
    ]

    # noncompliance labels
    g = rng["labels"]
    p_nc = sigmoid(config.noncompliance_intercept + config.noncompliance_slope * latent)
    noncompliant = g.random(n) < p_nc
    nc_sentence = g.integers(0, len(NONCOMPLIANT_SENTENCES), n)
    decoy = g.random(n) < 0.1

    # notes: every draw is made up front, one array per quantity
    g = rng["notes"]
    n_notes = np.where(noncompliant, g.integers(1, 5, n), g.integers(0, 5, n))
    carrier = (g.random(n) * np.maximum(n_notes, 1)).astype(np.int64)
    owner = np.repeat(np.arange(n), n_notes)
    n_total = len(owner)
    note_time = admit[owner] + (g.random(n_total) * (stay[owner] + 1)).astype(np.int64)
    category = g.integers(0, len(NOTE_CATEGORIES), n_total)
    n_sent = g.integers(3, 7, n_total)
    m = int(n_sent.sum())
    inject = g.random(m) < config.lexicon_injection_rate
    positive = g.random(m) < np.repeat(sigmoid(-config.sentiment_slope * latent)[owner], n_sent)
    template = g.integers(0, 1 << 30, m)
    word = g.integers(0, 1 << 30, m)
    notes = []
    k = 0
    first_note = np.concatenate([[0], np.cumsum(n_notes)[:-1]])
    for q, (i, t, ns) in enumerate(zip(owner.tolist(), note_time.tolist(), n_sent.tolist())):
        parts = []
        for s_ in range(k, k + ns):
            if inject[s_]:
                words = POSITIVE_WORDS if positive[s_] else NEGATIVE_WORDS
                parts.append(SENTIMENT_SENTENCES[template[s_] % len(SENTIMENT_SENTENCES)]
                             .format(word=words[word[s_] % len(words)]))
            else:
                parts.append(SENTENCES[template[s_] % len(SENTENCES)].format(
                    date=_fmt(t - _BASE_TIME), time=f"{t % 1440 // 60}:{t % 60:02d}",
                    short=f"{1 + t % 12}-{1 + t % 28}-18"))
        k += ns
        if q - first_note[i] == carrier[i]:
            if noncompliant[i]:
                parts.append(NONCOMPLIANT_SENTENCES[nc_sentence[i]])
            elif decoy[i]:
                parts.append(DECOY_SENTENCES[i % len(DECOY_SENTENCES)])
        notes.append(NoteRecord(ids[i], t, NOTE_CATEGORIES[category[q]], " ".join(parts)))

    # severity scores
    g = rng["severity"]
    rho, rl = config.severity_correlation, config.severity_latent_correlation
    z_oasis = rl * base_latent + math.sqrt(1 - rl * rl) * g.standard_normal(n)
    z_saps = rho * z_oasis + math.sqrt(1 - rho * rho) * g.standard_normal(n)
    oasis = np.maximum(np.round(config.oasis_mean + config.oasis_sd * z_oasis), 0)
    saps = np.maximum(np.round(config.sapsii_mean + config.sapsii_sd * z_saps), 0)
    severity = [SeverityRecord(ids[i], float(oasis[i]), float(saps[i])) for i in range(n)]

    ds = EhrDataset.build(admissions, events, notes, spans, severity)
    truth = GroundTruth(
        latent={ids[i]: float(latent[i]) for i in range(n)},
        noncompliant={ids[i]: bool(noncompliant[i]) for i in range(n)},
        high_latent=frozenset(ids[i] for i in np.flatnonzero(high)),
    )
    return ds, truth


# -- key=value config files ------------------------------------------------


def read_config(path: str | os.PathLike) -> SynthConfig:
    types = {f.name: f.type for f in dataclasses.fields(SynthConfig)}
    values: dict = {}
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{i}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"{path}:{i}: unknown key {key!r}")
        kind = types[key]
        try:
            if kind == "int":
                values[key] = int(raw)
            elif kind == "float":
                values[key] = float(raw)
            else:
                values[key] = tuple(float(v) for v in raw.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"{path}:{i}: bad value for {key}: {raw!r}") from None
    return SynthConfig(**values)


def write_config(config: SynthConfig, path: str | os.PathLike) -> None:
    lines = []
    for f in dataclasses.fields(config):
        v = getattr(config, f.name)
        if isinstance(v, tuple):
            v = ",".join(repr(float(s)) for s in v)
        lines.append(f"{f.name}={v}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_ground_truth(truth: GroundTruth, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("admission_id,latent_mistrust,noncompliant,high_latent\n")
        for aid in sorted(truth.latent):
            fh.write(f"{aid},{truth.latent[aid]!r},{int(truth.noncompliant[aid])},"
                     f"{int(aid in truth.high_latent)}\n")
