"""Train every variant on a synthetic corpus and compare them on the test split."""

# %%
import tempfile
from pathlib import Path

from steadyrc.artifact import load_model
from steadyrc.dataset import synthesize_corpus
from steadyrc.experiment import VARIANTS, RunConfig, run_pipeline

episodes = synthesize_corpus(300, seed=0)
out = Path(tempfile.mkdtemp())

# %%
print(f"{'variant':14s} {'AUC':>6s} {'loss@0':>7s} {'theta':>6s} {'TPR':>6s} {'FPR':>6s} {'mu_terr':>8s} {'saved':>6s}")
for key, v in VARIANTS.items():
    result = run_pipeline(RunConfig(variant=key, n_r=100, out_dir=str(out / key)), episodes)
    r = result.report
    p0 = r.point("theta0")
    p = r.points[-1]
    auc = "  ----" if r.auc is None else f"{r.auc:6.3f}"
    print(f"{v.name:14s} {auc} {100 * p0.confusion.zero_one_loss:6.2f}% {p.threshold:6.3f} "
          f"{p.confusion.tpr:6.3f} {p.confusion.fpr:6.3f} {p.stats.mu_terr:7.2f}m {p.mean_time_saved:5.1f}m")

# %%
# Artifacts: CSV reports plus the model file, which reloads losslessly.
print(sorted(q.name for q in (out / "rc2_clu_inp").iterdir()))
model = load_model(out / "rc2_clu_inp" / "model.npz")
print(model.variant, "threshold", model.threshold, "n_r", model.config.n_r, "inputs", model.config.n_i)
