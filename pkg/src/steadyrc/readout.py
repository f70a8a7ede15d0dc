"""Linear readout trained by ridge regression over harvested reservoir states."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg as la

from .clustering import N_INIT, Centroids, assign_cluster, initial_window, one_hot
from .dataset import Episode, NormStats
from .errors import DataError, DimensionMismatch, SingularSystem
from .reservoir import ReservoirConfig, ReservoirWeights, harvest_batch, init_weights, readout

DEFAULT_LAMBDA = 0.001

# harvested states per chunk, in floats (~64 MB)
_CHUNK_FLOATS = 8_000_000


@dataclass
class DesignMatrix:
    """Stacked states with a trailing column of ones, and +/-1 targets."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise DimensionMismatch("X must be (n_s, n) and y must have n_s entries")
        if self.X.shape[0] < 1:
            raise DataError("design matrix has no samples")

    @classmethod
    def from_states(cls, states, y) -> "DesignMatrix":
        states = np.asarray(states, dtype=float)
        return cls(np.hstack([states, np.ones((states.shape[0], 1))]), y)

    @property
    def n_s(self) -> int:
        return self.X.shape[0]


def solve_ridge(xtx, xty, lam: float) -> np.ndarray:
    """Solve ``(X^T X + lam I) w = X^T y`` by Cholesky with one refinement step."""
    xtx = np.asarray(xtx, dtype=float)
    xty = np.asarray(xty, dtype=float)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    a = xtx + lam * np.eye(xtx.shape[0])
    if lam == 0:
        ev = np.linalg.eigvalsh(a)
        if ev[0] <= ev[-1] * a.shape[0] * np.finfo(float).eps:
            raise SingularSystem("X^T X is rank-deficient and lambda is zero")
    try:
        factor = la.cho_factor(a, lower=True)
    except la.LinAlgError:
        raise SingularSystem("normal equations are not positive definite") from None
    w = la.cho_solve(factor, xty)
    w += la.cho_solve(factor, xty - a @ w)
    return w


def ridge_regress(design: DesignMatrix, lam: float) -> np.ndarray:
    """Ridge solution ``(X^T X + lam I)^-1 X^T y`` for a full design matrix."""
    X = design.X
    return solve_ridge(X.T @ X, X.T @ design.y, lam)


class NormalEquations:
    """Accumulates ``X^T X`` and ``X^T y`` one episode at a time.

    The ones column of the design matrix is implicit, so the stacked matrix
    never has to exist in memory.
    """

    def __init__(self, n_r: int):
        self.n_r = n_r
        self.xtx = np.zeros((n_r + 1, n_r + 1))
        self.xty = np.zeros(n_r + 1)
        self.n_s = 0

    def add(self, states, y) -> None:
        s = np.asarray(states, dtype=float)
        y = np.asarray(y, dtype=float)
        if s.ndim != 2 or s.shape[1] != self.n_r or y.shape != (s.shape[0],):
            raise DimensionMismatch("states must be (n, n_r) with n targets")
        n = self.n_r
        col = s.sum(axis=0)
        self.xtx[:n, :n] += s.T @ s
        self.xtx[:n, n] += col
        self.xtx[n, :n] += col
        self.xtx[n, n] += s.shape[0]
        self.xty[:n] += s.T @ y
        self.xty[n] += y.sum()
        self.n_s += s.shape[0]

    def solve(self, lam: float) -> np.ndarray:
        if self.n_s == 0:
            raise DataError("no samples accumulated")
        return solve_ridge(self.xtx, self.xty, lam)


def n_analog_inputs(use_setpoint: bool) -> int:
    return 4 if use_setpoint else 3


def episode_inputs(ep: Episode, use_setpoint: bool, u2=None) -> np.ndarray:
    """Reservoir input rows ``[cap, shell_temp, pressure, (setpoint), (u2...)]``.

    ``u2`` is the one-hot cluster code, repeated on every row.
    """
    cols = [ep.cap, ep.shell_temp, ep.pressure]
    if use_setpoint:
        cols.append(ep.setpoint.astype(float))
    u = np.column_stack(cols)
    if u2 is not None:
        u = np.hstack([u, np.broadcast_to(np.asarray(u2, dtype=float), (ep.n_e, len(u2)))])
    return u


def episode_cluster(ep: Episode, centroids: Centroids) -> int:
    return assign_cluster(initial_window(ep.cap, centroids.n_I), centroids)


def harvest_chunks(
    weights: ReservoirWeights, inputs: Sequence[np.ndarray], alpha: float
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(index, states)`` for every episode, harvesting a chunk at a time."""
    i = 0
    while i < len(inputs):
        j = i + 1
        longest = inputs[i].shape[0]
        while j < len(inputs):
            longest_next = max(longest, inputs[j].shape[0])
            if (j - i + 1) * longest_next * weights.n_r > _CHUNK_FLOATS:
                break
            longest = longest_next
            j += 1
        for offset, states in enumerate(harvest_batch(weights, inputs[i:j], alpha)):
            yield i + offset, states
        i = j


@dataclass(frozen=True)
class TrainedModel:
    """Reservoir plus trained readout and everything needed to score new episodes.

    ``w_out`` has ``n_r + 1`` entries; the last one is the output bias.
    Subspace projection is active when ``centroids`` is set.
    """

    variant: str
    config: ReservoirConfig
    weights: ReservoirWeights
    w_out: np.ndarray
    lam: float
    norm_stats: NormStats | None
    centroids: Centroids | None
    threshold: float = 0.0
    n_I: int = N_INIT
    use_setpoint: bool = True

    def inputs(self, ep: Episode) -> np.ndarray:
        u2 = None
        if self.centroids is not None:
            u2 = one_hot(episode_cluster(ep, self.centroids), self.centroids.k)
        return episode_inputs(ep, self.use_setpoint, u2)

    def score(self, episodes: Sequence[Episode]) -> list[np.ndarray]:
        """Analog readout per sample for each (normalized) episode."""
        inputs = [self.inputs(ep) for ep in episodes]
        out: list[np.ndarray | None] = [None] * len(inputs)
        for i, states in harvest_chunks(self.weights, inputs, self.config.alpha):
            out[i] = readout(self.w_out, states)
        return out

    def with_threshold(self, theta: float) -> "TrainedModel":
        return dataclasses.replace(self, threshold=float(theta))


def train_model(
    episodes: Sequence[Episode],
    config: ReservoirConfig,
    lam: float = DEFAULT_LAMBDA,
    subspace: Centroids | None = None,
    use_setpoint: bool = True,
    norm_stats: NormStats | None = None,
    n_I: int = N_INIT,
    variant: str = "",
    weights: ReservoirWeights | None = None,
) -> TrainedModel:
    """Harvest every training episode and fit the readout.

    Episodes must be normalized and labeled. ``config.n_i`` is set from the
    input layout (analog channels plus ``subspace.k`` binary inputs). Every
    sample enters the regression; there is no washout.
    """
    if not episodes:
        raise DataError("training set is empty")
    for ep in episodes:
        if not ep.labeled:
            raise DataError(f"episode {ep.id} has no labels")
    n_i = n_analog_inputs(use_setpoint) + (subspace.k if subspace is not None else 0)
    if config.n_i != n_i:
        config = dataclasses.replace(config, n_i=n_i)
    if weights is None:
        weights = init_weights(config)
    elif weights.n_i != n_i or weights.n_r != config.n_r:
        raise DimensionMismatch("supplied weights do not match the input layout")
    model = TrainedModel(
        variant=variant,
        config=config,
        weights=weights,
        w_out=np.zeros(config.n_r + 1),
        lam=float(lam),
        norm_stats=norm_stats,
        centroids=subspace,
        n_I=n_I,
        use_setpoint=use_setpoint,
    )
    inputs = [model.inputs(ep) for ep in episodes]
    acc = NormalEquations(config.n_r)
    for i, states in harvest_chunks(weights, inputs, config.alpha):
        acc.add(states, episodes[i].y_hat)
    w_out = acc.solve(lam)
    if not np.all(np.isfinite(w_out)):
        raise SingularSystem("readout weights are not finite")
    return dataclasses.replace(model, w_out=w_out)
