"""
Working from files and the command line
=======================================

Data come in one long CSV with columns study_id, group, s, y. The new
study's rows leave y empty. The same steps are available as shell commands,
for example

    surrogate-resilience resilience --data studies.csv --J 500 --seed 1 \\
        --inference pab --R 200 --out result.json
"""

# %%
import json

from surrogate_resilience import generate_dataset
from surrogate_resilience.cli import main
from surrogate_resilience.io import load_csv, write_csv

studies, new, _ = generate_dataset(2, K=8, n_per_group=50, seed=4)
write_csv("studies.csv", studies, new)
print(open("studies.csv").read().splitlines()[:3])
ds = load_csv("studies.csv")
print(len(ds.studies), "completed studies; new study has", ds.new_study.s0.size, "control rows")

# %%
main(["resilience", "--data", "studies.csv", "--J", "500", "--seed", "1",
      "--inference", "pab", "--R", "50", "--out", "result.json"])
res = json.load(open("result.json"))
print({k: res[k] for k in ("p_hat", "se", "ci_lo", "ci_hi", "method")})

# %%
main(["elliott", "--data", "studies.csv", "--out", "comparator.json"])
print(json.load(open("comparator.json"))["p_e"])

# %% Curve data for plotting fitted and random mean functions.
main(["plot-data", "--data", "studies.csv", "--curves", "5", "--seed", "2", "--out", "curves.csv"])
print(open("curves.csv").read().splitlines()[:3])
