"""Lexicon sentiment of clinical notes, placeholders removed first."""

# %%
import numpy as np

from eolmistrust.cohort import Cohort, build_eol_cohort
from eolmistrust.sentiment import load_lexicon, score_population, score_text, tokenize
from eolmistrust.synth import SynthConfig, generate

lexicon = load_lexicon()
print(len(lexicon), "lexicon entries")

# brackets such as "[**5-1-18**]" vanish before tokenizing, so ":[" is never read as a frown
print(tokenize("Date:[**5-1-18**] pt calm, resting comfortably"))
print(score_text("Date:[**5-1-18**]", lexicon))
print(score_text("patient had a good night", {"good": 0.7}))

# %% per-stay score, then z-normalized over the population
ds, truth = generate(SynthConfig(n_admissions=1500, seed=7))
with_notes = {n.admission_id for n in ds.notes}
eol = build_eol_cohort(ds)
pop = Cohort.of("eol_notes", (a for a in eol.admission_ids if a in with_notes))
scores = score_population(ds, pop, lexicon)
z = [s.normalized for s in scores]
print(f"n={len(z)} mean={sum(z) / len(z):.2e} var={sum(v * v for v in z) / len(z):.12f}")

# %% higher latent mistrust shows up as more negative notes
lat = [truth.latent[s.admission_id] for s in scores]
print("corr(latent, sentiment) =", np.corrcoef(lat, z)[0, 1].round(3))
