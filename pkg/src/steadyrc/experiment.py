"""End-to-end runs: configuration, training of each model variant, evaluation,
grid search over spectral radius x leak rate, and reservoir-size sweeps.

Variants:

============  ===============  =====================================
key           report name      inputs
============  ===============  =====================================
rc1           RC.1             cap, shell_temp, pressure
rc1_inp       RC.1.inp         + setpoint indicator
rc2_clu       RC.2_clu         + one-hot cluster of the initial window
rc2_clu_inp   RC.2_clu.inp     + setpoint + one-hot cluster
reference     Reference        none, fixed stop time
============  ===============  =====================================
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .artifact import save_model
from .clustering import Centroids, initial_window, kmeans_fit
from .dataset import (
    DEFAULT_RATIOS,
    DatasetSplit,
    Episode,
    NormStats,
    normalize,
    read_episode,
    read_manifest,
    split_dataset,
    split_from_manifest,
)
from .errors import ConfigError, DataError
from .evaluation import (
    EvaluationReport,
    ReferenceModel,
    auc,
    evaluate,
    naive_reference,
    pooled_samples,
    roc_curve,
    score_episodes,
    select_threshold_for_fpr,
    write_report,
)
from .readout import TrainedModel, train_model
from .reservoir import WEIGHT_DISTS, ReservoirConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Variant:
    name: str
    use_setpoint: bool = False
    subspace: bool = False
    reference: bool = False


VARIANTS = {
    "rc1": Variant("RC.1"),
    "rc1_inp": Variant("RC.1.inp", use_setpoint=True),
    "rc2_clu": Variant("RC.2_clu", subspace=True),
    "rc2_clu_inp": Variant("RC.2_clu.inp", use_setpoint=True, subspace=True),
    "reference": Variant("Reference", reference=True),
}

DEFAULT_RHO_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99)
DEFAULT_ALPHA_GRID = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs. ``n_init`` is the initial-window length in samples."""

    manifest: str | None = None
    variant: str = "rc2_clu_inp"
    n_r: int = 600
    alpha: float = 0.1
    rho: float = 0.2
    v_inp: float = 0.4
    v_bias: float = 0.2
    weight_dist: str = "gaussian"
    seed: int = 0
    lam: float = 0.001
    k: int = 4
    n_init: int = 80
    split_ratios: tuple[float, ...] = DEFAULT_RATIOS
    split_seed: int = 0
    rho_grid: tuple[float, ...] = DEFAULT_RHO_GRID
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    sizes: tuple[int, ...] = (50, 100, 600)
    seeds: tuple[int, ...] = (0,)
    target_fpr: float = 0.02
    out_dir: str = "out"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; choose from {sorted(VARIANTS)}")
        if self.weight_dist not in WEIGHT_DISTS:
            raise ConfigError(f"weight_dist must be one of {WEIGHT_DISTS}")
        if not self.rho_grid or not self.alpha_grid or not self.sizes or not self.seeds:
            raise ConfigError("grids, sizes and seeds must be non-empty")
        if not 0.0 <= self.target_fpr <= 1.0:
            raise ConfigError("target_fpr must lie in [0, 1]")
        if self.lam < 0 or self.k < 1 or self.n_init < 1:
            raise ConfigError("lam must be >= 0, k and n_init >= 1")
        if len(self.split_ratios) != 3 or abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ConfigError("split_ratios must be three numbers summing to 1")
        self.reservoir_config()

    @property
    def variant_info(self) -> Variant:
        return VARIANTS[self.variant]

    def reservoir_config(self, **changes) -> ReservoirConfig:
        cfg = dict(
            n_r=self.n_r, alpha=self.alpha, rho_target=self.rho, v_inp=self.v_inp,
            v_bias=self.v_bias, weight_dist=self.weight_dist, seed=self.seed,
        )
        cfg.update(changes)
        return ReservoirConfig(**cfg)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _coerce(name: str, raw: str):
    f = {f.name: f for f in dataclasses.fields(RunConfig)}.get(name)
    if f is None:
        raise ConfigError(f"unknown config key {name!r}")
    kind = str(f.type)
    raw = raw.strip()
    try:
        if kind.startswith("tuple"):
            item = int if "int" in kind else float
            return tuple(item(v) for v in raw.replace(" ", "").split(",") if v)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return raw or None


def parse_config(text: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment, lists are comma separated."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _coerce(key, value)
    return out


def load_run_config(path=None, **overrides) -> RunConfig:
    """Config file values, then non-``None`` overrides (e.g. CLI flags) on top."""
    values = {}
    if path is not None:
        try:
            values = parse_config(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if values.get("manifest") and not Path(values["manifest"]).is_absolute():
            values["manifest"] = str(Path(path).parent / values["manifest"])
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# Data preparation


@dataclass
class Corpus:
    """Normalized train/val/test episodes and the training maxima used."""

    train: list[Episode]
    val: list[Episode]
    test: list[Episode]
    stats: NormStats
    split: DatasetSplit


def load_episodes(manifest) -> tuple[list[Episode], DatasetSplit | None]:
    entries = read_manifest(manifest)
    if not entries:
        raise DataError(f"manifest {manifest} lists no episodes")
    episodes = [read_episode(e.path) for e in entries]
    for e, ep in zip(entries, episodes):
        if ep.id != e.id:
            raise DataError(f"manifest id {e.id} does not match episode file id {ep.id}")
    return episodes, split_from_manifest(entries)


def prepare_corpus(episodes: Sequence[Episode], split: DatasetSplit) -> Corpus:
    """Normalize all splits with maxima taken from the training split only."""
    by_id = {ep.id: ep for ep in episodes}
    try:
        parts = [[by_id[i] for i in ids] for ids in (split.train, split.val, split.test)]
    except KeyError as exc:
        raise DataError(f"split refers to unknown episode {exc}") from None
    stats = NormStats.from_episodes(parts[0])
    train, val, test = (normalize(p, stats) for p in parts)
    return Corpus(train=train, val=val, test=test, stats=stats, split=split)


def resolve_split(config: RunConfig, episodes=None, split=None) -> tuple[list[Episode], DatasetSplit]:
    """Episodes from the manifest unless given; split from the manifest, else a seeded draw."""
    if episodes is None:
        if not config.manifest:
            raise ConfigError("no manifest given")
        episodes, manifest_split = load_episodes(config.manifest)
        split = split or manifest_split
    if split is None:
        split = split_dataset([ep.id for ep in episodes], config.split_ratios, config.split_seed)
    return list(episodes), split


def corpus_from_config(config: RunConfig, episodes=None, split=None) -> Corpus:
    return prepare_corpus(*resolve_split(config, episodes, split))


def fit_centroids(train: Sequence[Episode], k: int, n_init: int, seed: int) -> Centroids:
    """k-means over the initial windows of the training episodes only."""
    windows = np.array([initial_window(ep.cap, n_init) for ep in train])
    return kmeans_fit(windows, k=k, seed=seed)


# ---------------------------------------------------------------------------
# Training and evaluation


def train_variant(config: RunConfig, corpus: Corpus, centroids: Centroids | None = None, weights=None):
    """Fit the configured variant on the training split (threshold left at 0)."""
    v = config.variant_info
    if v.reference:
        return dataclasses.replace(naive_reference(corpus.train), variant=v.name)
    if v.subspace and centroids is None:
        centroids = fit_centroids(corpus.train, config.k, config.n_init, config.seed)
    return train_model(
        corpus.train,
        config.reservoir_config(),
        lam=config.lam,
        subspace=centroids if v.subspace else None,
        use_setpoint=v.use_setpoint,
        norm_stats=corpus.stats,
        n_I=config.n_init,
        variant=v.name,
        weights=weights,
    )


def validation_auc(model, corpus: Corpus, n_init: int) -> float:
    s, y = pooled_samples(score_episodes(model, corpus.val, n_init))
    return auc(roc_curve(s, y))


@dataclass
class PipelineResult:
    model: TrainedModel | ReferenceModel
    report: EvaluationReport
    val_auc: float | None
    split: DatasetSplit
    paths: dict = field(default_factory=dict)


def fit_with_threshold(config: RunConfig, corpus: Corpus):
    """Train, then pick the threshold at ``target_fpr`` on validation data.

    Returns ``(model, validation AUC)``; the AUC is ``None`` for the reference.
    """
    model = train_variant(config, corpus)
    if isinstance(model, ReferenceModel):
        return model, None
    s, y = pooled_samples(score_episodes(model, corpus.val, config.n_init))
    theta = select_threshold_for_fpr(s, y, config.target_fpr)
    return model.with_threshold(theta), auc(roc_curve(s, y))


def evaluate_model(model, episodes: Sequence[Episode], n_init: int) -> EvaluationReport:
    """Test report at threshold 0 and, for reservoir models, at the stored threshold."""
    scored = score_episodes(model, episodes, n_init)
    if isinstance(model, ReferenceModel):
        return evaluate(model.variant, scored, {"theta0": 0.0}, with_roc=False)
    return evaluate(model.variant, scored, {"theta0": 0.0, "theta_fpr": model.threshold})


def model_inputs(model, episodes: Sequence[Episode]) -> list[Episode]:
    """Raw episodes as a saved model expects them: normalized with its training maxima."""
    if isinstance(model, ReferenceModel):
        return list(episodes)
    if model.norm_stats is None:
        raise DataError("model carries no normalization statistics")
    return normalize(episodes, model.norm_stats)


def evaluate_saved(config: RunConfig, model, episodes=None, split=None) -> EvaluationReport:
    """Test report for a stored model on the test split of ``config``'s corpus."""
    episodes, split = resolve_split(config, episodes, split)
    by_id = {ep.id: ep for ep in episodes}
    try:
        test = [by_id[i] for i in split.test]
    except KeyError as exc:
        raise DataError(f"split refers to unknown episode {exc}") from None
    n_init = model.n_I if isinstance(model, TrainedModel) else config.n_init
    return evaluate_model(model, model_inputs(model, test), n_init)


def run_pipeline(config: RunConfig, episodes=None, split=None, write: bool = True) -> PipelineResult:
    """Split, normalize, fit, select the threshold on validation, evaluate on test.

    With ``write=True`` the CSV artifacts and ``model.npz`` go to ``config.out_dir``.
    """
    corpus = corpus_from_config(config, episodes, split)
    model, val_auc = fit_with_threshold(config, corpus)
    report = evaluate_model(model, corpus.test, config.n_init)
    result = PipelineResult(model=model, report=report, val_auc=val_auc, split=corpus.split)
    if write:
        out = Path(config.out_dir)
        result.paths = write_report(report, out)
        result.paths["model"] = save_model(model, out / "model.npz")
    return result


# ---------------------------------------------------------------------------
# Parameter studies


@dataclass
class GridResult:
    """Validation AUC over ``rho x alpha``, averaged over seeds (``per_seed`` keeps them all)."""

    rho: tuple[float, ...]
    alpha: tuple[float, ...]
    auc: np.ndarray
    per_seed: np.ndarray
    seeds: tuple[int, ...]

    @property
    def argmax(self) -> tuple[float, float]:
        i, j = np.unravel_index(int(np.argmax(self.auc)), self.auc.shape)
        return self.rho[i], self.alpha[j]

    @property
    def stats(self) -> dict[str, float]:
        return {"min": float(self.auc.min()), "mean": float(self.auc.mean()), "std": float(self.auc.std())}


def grid_cell_auc(config: RunConfig, corpus: Corpus, rho: float, alpha: float, centroids=None) -> float:
    cell = config.replace(rho=rho, alpha=alpha)
    model = train_variant(cell, corpus, centroids=centroids)
    return validation_auc(model, corpus, config.n_init)


def grid_search(config: RunConfig, corpus: Corpus, rho_grid=None, alpha_grid=None, seeds=None) -> GridResult:
    """Retrain the readout for every grid cell and record validation AUC.

    For a given seed every cell rescales the same raw recurrent draw to its
    spectral radius. Cells do not share state, so their order is irrelevant.
    """
    if config.variant_info.reference:
        raise ConfigError("the reference model has no reservoir parameters to search")
    rho_grid = tuple(rho_grid or config.rho_grid)
    alpha_grid = tuple(alpha_grid or config.alpha_grid)
    seeds = tuple(seeds if seeds is not None else config.seeds)
    cube = np.empty((len(seeds), len(rho_grid), len(alpha_grid)))
    for s, seed in enumerate(seeds):
        cfg = config.replace(seed=seed)
        centroids = None
        if cfg.variant_info.subspace:
            centroids = fit_centroids(corpus.train, cfg.k, cfg.n_init, seed)
        for i, rho in enumerate(rho_grid):
            for j, alpha in enumerate(alpha_grid):
                cube[s, i, j] = grid_cell_auc(cfg, corpus, rho, alpha, centroids)
            log.info("seed %d rho %.3g done: %s", seed, rho, np.round(cube[s, i], 4))
    return GridResult(rho=rho_grid, alpha=alpha_grid, auc=cube.mean(axis=0), per_seed=cube, seeds=seeds)


def write_grid(result: GridResult, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["rho", "alpha", "auc"] + [f"auc_seed{s}" for s in result.seeds])
        for i, rho in enumerate(result.rho):
            for j, alpha in enumerate(result.alpha):
                w.writerow([repr(rho), repr(alpha), repr(float(result.auc[i, j]))]
                           + [repr(float(v)) for v in result.per_seed[:, i, j]])
    return path


def reservoir_size_sweep(config: RunConfig, corpus: Corpus, sizes=None, seeds=None) -> list[tuple[int, float, list[float]]]:
    """Test AUC per reservoir size, averaged over seeds: rows ``(n_r, mean_auc, per_seed)``."""
    if config.variant_info.reference:
        raise ConfigError("the reference model has no reservoir")
    sizes = tuple(sizes or config.sizes)
    seeds = tuple(seeds if seeds is not None else config.seeds)
    rows = []
    for n_r in sizes:
        aucs = []
        for seed in seeds:
            model = train_variant(config.replace(n_r=n_r, seed=seed), corpus)
            s, y = pooled_samples(score_episodes(model, corpus.test, config.n_init))
            aucs.append(auc(roc_curve(s, y)))
        rows.append((int(n_r), float(np.mean(aucs)), aucs))
    return rows


def write_size_sweep(rows, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["n_r", "auc", "auc_per_seed"])
        for n_r, mean_auc, per_seed in rows:
            w.writerow([n_r, repr(mean_auc), ";".join(repr(float(a)) for a in per_seed)])
    return path
