"""Train the sparse mistrust model on interpersonal chart features."""

# %%
import numpy as np

from eolmistrust.chart_features import DEFAULT_WHITELIST, build_vocabulary, encode
from eolmistrust.cohort import build_notes_population
from eolmistrust.noncompliance import label_noncompliance
from eolmistrust.sparse_logreg import fit, lambda_max, top_features
from eolmistrust.synth import SynthConfig, generate

ds, truth = generate(SynthConfig(n_admissions=2000, seed=3))
population = build_notes_population(ds)

# %% noncompliance labels come from a word-boundary regex over the notes
labels = label_noncompliance(ds, population)
print(sum(labels.values()), "of", len(labels), "admissions documented noncompliant")

# %% one binary column per observed "item: value" pair of a whitelisted item
vocab = build_vocabulary(ds, DEFAULT_WHITELIST)
fm = encode(ds, population, vocab)
print(fm.values.shape, "feature matrix,", fm.values.mean().round(3), "density")

# %% L1 logistic regression; 1/C is the penalty weight
model = fit(fm, labels, C=1.0)
print(f"converged={model.converged} after {model.iterations} iterations, objective {model.objective:.3f}")
print(np.count_nonzero(model.weights), "nonzero of", len(model.weights))
for name, w in top_features(model, 3):
    print(f"  {w:+.4f}  {name}")

# %% with the penalty at lambda_max every weight is exactly zero
y = np.array([labels[a] for a in fm.admission_ids], dtype=float)
lam = lambda_max(fm.values.astype(float), y)
print("lambda_max", round(lam, 3), "->", np.count_nonzero(fit(fm, labels, C=1 / (lam * 1.0000001)).weights), "nonzero")
