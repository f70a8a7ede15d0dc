"""Validation AUC over spectral radius x leak rate, with and without subspace projection."""

# %%
import numpy as np

from steadyrc.dataset import synthesize_corpus
from steadyrc.experiment import RunConfig, corpus_from_config, grid_search

corpus = corpus_from_config(RunConfig(), synthesize_corpus(300, seed=0))
rho = (0.1, 0.3, 0.5, 0.7, 0.9)
alpha = (0.05, 0.1, 0.3, 0.6, 1.0)

# %%
results = {}
for variant in ("rc1_inp", "rc2_clu_inp"):
    g = grid_search(RunConfig(variant=variant, n_r=100), corpus, rho_grid=rho, alpha_grid=alpha)
    results[variant] = g
    print(variant, {k: round(v, 4) for k, v in g.stats.items()}, "best (rho, alpha):", g.argmax)
    print("      alpha " + " ".join(f"{a:6g}" for a in alpha))
    for r, row in zip(rho, g.auc):
        print(f"rho {r:4g}     " + " ".join(f"{v:6.3f}" for v in row))

# %%
# The cluster input mostly helps where the plain model is weakest: fast reservoirs.
diff = results["rc2_clu_inp"].auc - results["rc1_inp"].auc
print("AUC gain from the cluster input, averaged over rho, per alpha:", np.round(diff.mean(axis=0), 3).tolist())
