"""Scoring and reporting for steady-state detectors.

Per-sample metrics pool every test episode and only count samples with
``t >= n_I``, for every model, because a clustered model cannot decide
anything before its initial window is complete. A detector's stop time
``t_p`` is the first such sample whose score reaches the threshold, or
``n_e`` when it never does.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, SingleClass, Unattainable

TERR_EDGES = np.concatenate([[-np.inf], np.arange(-60.0, 61.0, 5.0), [np.inf]])
DEVIATION_EDGES = np.concatenate([[-np.inf], np.round(np.arange(-0.10, 0.1001, 0.01), 10), [np.inf]])
SWEEP_THRESHOLDS = np.round(np.linspace(-1.0, 1.5, 51), 10)


def _as_labels(labels) -> np.ndarray:
    y = np.asarray(labels)
    return y > 0


@dataclass(frozen=True)
class RocCurve:
    """ROC points ordered by decreasing threshold; the first point is ``(inf, 0, 0)``."""

    thresholds: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray

    def points(self):
        return list(zip(self.thresholds.tolist(), self.tpr.tolist(), self.fpr.tolist()))


def roc_curve(scores, labels) -> RocCurve:
    """Sweep a threshold over every distinct score (predict +1 iff score >= threshold)."""
    s = np.asarray(scores, dtype=float).ravel()
    pos = _as_labels(labels).ravel()
    if s.shape != pos.shape:
        raise DataError("scores and labels differ in length")
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs both positive and negative samples")
    order = np.argsort(-s, kind="mergesort")
    s, pos = s[order], pos[order]
    tp = np.cumsum(pos)
    fp = np.cumsum(~pos)
    # last index of each group of tied scores
    last = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    return RocCurve(
        thresholds=np.r_[np.inf, s[last]],
        tpr=np.r_[0.0, tp[last] / n_pos],
        fpr=np.r_[0.0, fp[last] / n_neg],
    )


def auc(roc: RocCurve) -> float:
    """Trapezoidal area under the ROC points."""
    x, y = roc.fpr, roc.tpr
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def tpr(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else float("nan")

    @property
    def fpr(self) -> float:
        d = self.tn + self.fp
        return self.fp / d if d else float("nan")

    @property
    def zero_one_loss(self) -> float:
        return (self.fp + self.fn) / self.total if self.total else float("nan")


def confusion_at_threshold(scores, labels, theta: float) -> Confusion:
    s = np.asarray(scores, dtype=float).ravel()
    pos = _as_labels(labels).ravel()
    pred = s >= theta
    return Confusion(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def select_threshold_for_fpr(scores, labels, target_fpr: float) -> float:
    """Lowest threshold whose false positive rate stays within ``target_fpr``.

    Lower thresholds give higher true positive rates, so this also maximizes
    TPR under the constraint. When a lower score exists, the midpoint of the
    gap down to it is returned; it has the same confusion counts and keeps a
    margin on both sides.
    """
    roc = roc_curve(scores, labels)
    ok = np.flatnonzero(roc.fpr[1:] <= target_fpr)
    if ok.size == 0:
        raise Unattainable(f"no threshold reaches a false positive rate of {target_fpr}")
    i = ok[-1] + 1
    theta = roc.thresholds[i]
    if i + 1 < roc.thresholds.size:
        theta = 0.5 * (theta + roc.thresholds[i + 1])
    return float(theta)


def detection_time(scores, theta: float, n_I: int = 0) -> int:
    """First sample ``t >= n_I`` with ``score >= theta``; ``n_e`` if none."""
    s = np.asarray(scores, dtype=float)
    hits = np.flatnonzero(s[n_I:] >= theta)
    return int(hits[0]) + n_I if hits.size else int(s.shape[0])


@dataclass(frozen=True)
class TimeErrorStats:
    mu_terr: float
    sigma_terr: float
    pct_late: float


def time_error_stats(t_p, t_d, dt: float = 10.0) -> TimeErrorStats:
    """Mean and population std of ``t_p - t_d`` in minutes, and the percentage of late stops."""
    terr = (np.asarray(t_p, dtype=float) - np.asarray(t_d, dtype=float)) * dt / 60.0
    if terr.size == 0:
        raise DataError("no episodes")
    return TimeErrorStats(
        mu_terr=float(terr.mean()),
        sigma_terr=float(terr.std()),
        pct_late=float(100.0 * np.mean(terr > 0)),
    )


def time_saved(n_e: int, t_p: int, dt: float = 10.0) -> float:
    """Minutes saved by stopping at ``t_p`` instead of ``n_e``."""
    if t_p > n_e:
        raise DataError("t_p cannot exceed the episode length")
    return (n_e - t_p) * dt / 60.0


def capacity_deviation(cap, t_p: int, cap_f: float) -> float:
    """``(cap(t_p) - cap_f) / cap_f``; a stop at ``n_e`` reads the last sample."""
    cap = np.asarray(cap, dtype=float)
    return float((cap[min(t_p, cap.shape[0] - 1)] - cap_f) / cap_f)


@dataclass(frozen=True)
class ReferenceModel:
    """Naive detector that declares steady state at a fixed sample for every episode."""

    fixed_sample: int
    dt: float = 10.0
    variant: str = "reference"
    threshold: float = 0.0

    @property
    def fixed_minutes(self) -> float:
        return self.fixed_sample * self.dt / 60.0

    def score(self, episodes) -> list[np.ndarray]:
        return [np.where(np.arange(ep.n_e) >= self.fixed_sample, 1.0, -1.0) for ep in episodes]


def naive_reference(training_episodes) -> ReferenceModel:
    """Fixed time at the mean training entrance time, rounded to a whole sample."""
    eps = list(training_episodes)
    if not eps or any(ep.t_d is None for ep in eps):
        raise DataError("reference model needs labeled training episodes")
    dts = {ep.dt for ep in eps}
    if len(dts) != 1:
        raise DataError("training episodes mix sampling periods")
    mean_td = float(np.mean([ep.t_d for ep in eps]))
    return ReferenceModel(fixed_sample=int(np.floor(mean_td + 0.5)), dt=dts.pop())


@dataclass
class ScoredEpisode:
    id: str
    scores: np.ndarray
    y_hat: np.ndarray
    t_d: int
    n_I: int
    cap: np.ndarray
    cap_f: float
    dt: float = 10.0

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if self.scores.shape != (self.n_e,) or np.asarray(self.y_hat).shape != (self.n_e,):
            raise DataError(f"episode {self.id}: scores, labels and capacity differ in length")
        if not np.all(np.isfinite(self.scores)):
            raise DataError(f"episode {self.id}: non-finite scores")

    @property
    def n_e(self) -> int:
        return np.asarray(self.cap).shape[0]


def score_episodes(model, episodes, n_I: int) -> list[ScoredEpisode]:
    """Pair a model's analog output with the labels of each episode."""
    scores = model.score(episodes)
    return [
        ScoredEpisode(
            id=ep.id, scores=s, y_hat=ep.y_hat, t_d=ep.t_d, n_I=n_I, cap=ep.cap, cap_f=ep.cap_f, dt=ep.dt
        )
        for ep, s in zip(episodes, scores)
    ]


def pooled_samples(scored: Sequence[ScoredEpisode]):
    """Scores and labels of all samples with ``t >= n_I``, concatenated."""
    if not scored:
        raise DataError("no scored episodes")
    s = np.concatenate([e.scores[e.n_I :] for e in scored])
    y = np.concatenate([np.asarray(e.y_hat)[e.n_I :] for e in scored])
    return s, y


@dataclass
class OperatingPoint:
    """Everything reported at one decision threshold."""

    name: str
    threshold: float
    confusion: Confusion
    t_p: np.ndarray
    terr: np.ndarray
    saved: np.ndarray
    deviation: np.ndarray
    stats: TimeErrorStats

    @property
    def mean_time_saved(self) -> float:
        return float(self.saved.mean())


def operating_point(scored: Sequence[ScoredEpisode], theta: float, name: str = "") -> OperatingPoint:
    s, y = pooled_samples(scored)
    t_p = np.array([detection_time(e.scores, theta, e.n_I) for e in scored])
    t_d = np.array([e.t_d for e in scored])
    dt = scored[0].dt
    return OperatingPoint(
        name=name,
        threshold=float(theta),
        confusion=confusion_at_threshold(s, y, theta),
        t_p=t_p,
        terr=(t_p - t_d) * dt / 60.0,
        saved=np.array([time_saved(e.n_e, tp, e.dt) for e, tp in zip(scored, t_p)]),
        deviation=np.array([capacity_deviation(e.cap, tp, e.cap_f) for e, tp in zip(scored, t_p)]),
        stats=time_error_stats(t_p, t_d, dt),
    )


@dataclass
class EvaluationReport:
    """Test-set results for one model. ``roc``/``auc`` are ``None`` for fixed-time models."""

    variant: str
    episode_ids: list[str]
    points: list[OperatingPoint]
    roc: RocCurve | None = None
    auc: float | None = None
    sweep: list[OperatingPoint] = field(default_factory=list)

    def point(self, name: str) -> OperatingPoint:
        for p in self.points:
            if p.name == name:
                return p
        raise KeyError(name)


def evaluate(
    variant: str,
    scored: Sequence[ScoredEpisode],
    thresholds: Mapping[str, float],
    with_roc: bool = True,
    sweep=SWEEP_THRESHOLDS,
) -> EvaluationReport:
    """Build a report at the named thresholds, plus a threshold sweep for rate curves."""
    report = EvaluationReport(
        variant=variant,
        episode_ids=[e.id for e in scored],
        points=[operating_point(scored, theta, name) for name, theta in thresholds.items()],
    )
    if with_roc:
        s, y = pooled_samples(scored)
        report.roc = roc_curve(s, y)
        report.auc = auc(report.roc)
        report.sweep = [operating_point(scored, float(theta)) for theta in sweep]
    return report


# ---------------------------------------------------------------------------
# CSV artifacts

SUMMARY_COLUMNS = (
    "variant", "setting", "threshold", "tpr", "fpr", "zero_one_loss", "auc",
    "mu_terr", "sigma_terr", "pct_late", "mean_time_saved", "n_samples", "n_episodes",
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _histogram_rows(setting, values, edges):
    counts, _ = np.histogram(values, bins=edges)
    return [(setting, float(lo), float(hi), int(c)) for lo, hi, c in zip(edges[:-1], edges[1:], counts)]


def write_report(report: EvaluationReport, out_dir) -> dict[str, Path]:
    """Write summary, ROC, rate-vs-threshold, histogram and per-episode CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    rows = []
    for p in report.points:
        c = p.confusion
        rows.append((
            report.variant, p.name, p.threshold, c.tpr, c.fpr, c.zero_one_loss, report.auc,
            p.stats.mu_terr, p.stats.sigma_terr, p.stats.pct_late, p.mean_time_saved,
            c.total, len(report.episode_ids),
        ))
    paths["summary"] = out / "summary.csv"
    _write_rows(paths["summary"], SUMMARY_COLUMNS, rows)

    if report.roc is not None:
        paths["roc"] = out / "roc.csv"
        _write_rows(paths["roc"], ("threshold", "tpr", "fpr"), report.roc.points())
    if report.sweep:
        paths["rates"] = out / "rates_vs_threshold.csv"
        _write_rows(
            paths["rates"],
            ("threshold", "tpr", "fpr", "mu_terr", "sigma_terr", "mean_time_saved"),
            [(p.threshold, p.confusion.tpr, p.confusion.fpr, p.stats.mu_terr, p.stats.sigma_terr,
              p.mean_time_saved) for p in report.sweep],
        )

    terr_rows, dev_rows = [], []
    for p in report.points:
        terr_rows += _histogram_rows(p.name, p.terr, TERR_EDGES)
        dev_rows += _histogram_rows(p.name, p.deviation, DEVIATION_EDGES)
    paths["terr_histogram"] = out / "terr_histogram.csv"
    _write_rows(paths["terr_histogram"], ("setting", "bin_lo", "bin_hi", "count"), terr_rows)
    paths["deviation_histogram"] = out / "deviation_histogram.csv"
    _write_rows(paths["deviation_histogram"], ("setting", "bin_lo", "bin_hi", "count"), dev_rows)

    ep_rows = []
    for p in report.points:
        for i, eid in enumerate(report.episode_ids):
            ep_rows.append((p.name, eid, int(p.t_p[i]), p.terr[i], p.saved[i], p.deviation[i]))
    paths["episodes"] = out / "episodes.csv"
    _write_rows(paths["episodes"], ("setting", "id", "t_p", "terr", "time_saved", "deviation"), ep_rows)
    return paths
