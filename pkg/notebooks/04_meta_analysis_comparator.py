"""
A bivariate meta-analysis comparator
====================================

Summarize each study by its treatment effects on surrogate and outcome,
fit a bivariate random-effects model across studies, and read off the
probability of a negative outcome effect given the new study's surrogate
effect.
"""

# %%
from surrogate_resilience import (
    compute_study_effects,
    elliott_prob,
    fit_bivariate_meta,
    generate_dataset,
    new_study_delta_s,
)

studies, new, _ = generate_dataset(1, K=10, n_per_group=100, seed=5)
effects = [compute_study_effects(st) for st in studies]
for e in effects[:3]:
    print(f"dS={e.delta_s:+.3f} dY={e.delta_y:+.3f}")

# %%
fit = fit_bivariate_meta(effects)
print(f"beta=({fit.beta_s:.3f}, {fit.beta_y:.3f})")
print("between-study covariance:\n", fit.D.round(4))

# %% The new study's surrogate effect and the conditional probability.
ds = new_study_delta_s(new)
print(f"new-study surrogate effect {ds:.3f}; P(dY < 0 | dS) = {elliott_prob(fit, ds):.3f}")
