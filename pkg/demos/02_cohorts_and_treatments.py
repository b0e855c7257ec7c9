"""End-of-life cohort, notes population and merged treatment durations."""

# %%
from eolmistrust.cohort import build_eol_cohort, build_notes_population, split_by_race
from eolmistrust.synth import SynthConfig, generate
from eolmistrust.treatments import durations_for_cohort, merge_spans, total_duration

ds, _ = generate(SynthConfig(n_admissions=1500, seed=7))

# %% died in hospital or left for hospice / SNF, stayed >= 6 h, black or white
eol = build_eol_cohort(ds)
strict = build_eol_cohort(ds, include_snf=False)
white, black = split_by_race(eol, ds)
print(f"EOL {len(eol)} (white {len(white)}, black {len(black)}); without SNF {len(strict)}")

# stays of >= 12 h with at least one note train the mistrust model
print("notes population", len(build_notes_population(ds)))

# %% spans separated by at most 600 minutes are one course, gap included
print(merge_spans([(0, 100), (500, 600)]))      # [(0, 600)]
print(merge_spans([(0, 60), (700, 760)]))       # gap of 640 keeps them apart
print(total_duration(merge_spans([(0, 60), (700, 760)])))

# %% per-admission totals; untreated admissions are simply absent
vent = durations_for_cohort(ds, eol, "ventilation")
print(f"{len(vent)} of {len(eol)} EOL admissions ventilated")
