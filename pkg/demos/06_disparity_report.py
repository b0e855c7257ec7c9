"""Full pipeline: race, trust and severity splits of treatment durations."""

# %%
import tempfile
from pathlib import Path

from eolmistrust.analysis import PipelineConfig, run_pipeline, write_report
from eolmistrust.synth import SynthConfig, generate

ds, truth = generate(SynthConfig(n_admissions=2000, seed=0))
report, trained, scores = run_pipeline(ds, PipelineConfig())

# %% the trust split uses exactly the race split's group sizes
for t, sections in report.treatments.items():
    for kind in ("race", "trust", "severity"):
        s = sections[kind]
        print(f"{t:12s} {kind:9s} n=({s['n_a']:4d},{s['n_b']:4d}) "
              f"medians {s['median_a']:7.0f} vs {s['median_b']:7.0f}  gap {s['median_gap']:+7.0f}  "
              f"p={s['mann_whitney']['p_two_sided']:.2g}")

# %% sentiment medians per split and the severity/mistrust correlations
for kind in ("race", "trust", "severity"):
    s = report.sentiment[kind]
    print(kind, s["group_a"], round(s["median_a"], 3), s["group_b"], round(s["median_b"], 3))
for label, row in zip(report.correlation["labels"], report.correlation["matrix"]):
    print(f"{label:9s}", " ".join(f"{v:+.3f}" for v in row))

# %% report.json, flat CSVs and one SVG per comparison
with tempfile.TemporaryDirectory() as tmp:
    files = write_report(report, tmp)
    print(len(files), "files;", Path(tmp, "report.json").stat().st_size, "bytes of JSON")
