"""Leaky echo-state reservoir.

The state update keeps the activation outside the whole leaky combination::

    x(t+1) = tanh((1 - alpha) * x(t) + alpha * (W_in u(t) + W_res x(t) + w_bias))

This differs from the more common form where the leak is applied after the
nonlinearity. Every episode starts from ``x(0) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DegenerateMatrix, DimensionMismatch, DataError

WEIGHT_DISTS = ("gaussian", "discrete")

# below this the rescaling factor is meaningless
_RHO_FLOOR = 1e-12


@dataclass(frozen=True)
class ReservoirConfig:
    """Hyperparameters of the reservoir.

    Attributes:
        n_r: Number of reservoir neurons.
        alpha: Leak rate in (0, 1]. Small values give a slow reservoir.
        rho_target: Spectral radius the recurrent matrix is rescaled to.
        v_inp: Input scaling applied to ``W_in``.
        v_bias: Bias scaling applied to ``w_bias``.
        weight_dist: ``"gaussian"`` for N(0, 1) or ``"discrete"`` for a
            uniform draw from {-1, 0, 1}.
        seed: Seed for the weight generator.
        n_i: Input dimension (analog inputs plus binary subspace inputs).
    """

    n_r: int = 600
    alpha: float = 0.1
    rho_target: float = 0.2
    v_inp: float = 0.4
    v_bias: float = 0.2
    weight_dist: str = "gaussian"
    seed: int = 0
    n_i: int = 3

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.rho_target > 0.0:
            raise ConfigError(f"rho_target must be positive, got {self.rho_target}")
        if self.n_r < 1 or self.n_i < 1:
            raise ConfigError("n_r and n_i must be at least 1")
        if self.v_inp < 0.0 or self.v_bias < 0.0:
            raise ConfigError("input and bias scalings must be non-negative")
        if self.weight_dist not in WEIGHT_DISTS:
            raise ConfigError(f"weight_dist must be one of {WEIGHT_DISTS}")


@dataclass(frozen=True)
class ReservoirWeights:
    """Fixed random matrices of a reservoir. Arrays are read-only."""

    w_in: np.ndarray
    w_res: np.ndarray
    w_bias: np.ndarray

    def __post_init__(self):
        n_r = self.w_res.shape[0]
        if self.w_res.shape != (n_r, n_r):
            raise DimensionMismatch("w_res must be square")
        if self.w_in.ndim != 2 or self.w_in.shape[0] != n_r:
            raise DimensionMismatch("w_in must have n_r rows")
        if self.w_bias.shape != (n_r,):
            raise DimensionMismatch("w_bias must have length n_r")
        for name in ("w_in", "w_res", "w_bias"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_r(self) -> int:
        return self.w_res.shape[0]

    @property
    def n_i(self) -> int:
        return self.w_in.shape[1]


def spectral_radius(w, tol=1e-9, max_iter=10_000, block=8, seed=0):
    """Largest eigenvalue magnitude of a square matrix by subspace power iteration.

    A block of ``block`` vectors is repeatedly multiplied by ``w`` and
    re-orthonormalized; the eigenvalues of the projected matrix ``Q^T W Q``
    (Ritz values) approximate the dominant part of the spectrum. Iterating a
    block rather than a single vector copes with complex-conjugate or
    near-degenerate dominant eigenvalues, which are the norm for random
    non-symmetric matrices.

    Args:
        w: Square matrix.
        tol: Relative change of the estimate below which iteration stops
            (required on three consecutive iterations).
        max_iter: Iteration cap.
        block: Subspace size; clipped to the matrix size.
        seed: Seed for the starting block.

    Returns:
        float: Estimated spectral radius.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionMismatch("spectral_radius expects a square matrix")
    n = w.shape[0]
    p = min(n, block)
    if p == n:
        # small matrix: the block would span the whole space, so take the
        # eigenvalues directly (a random rotation would smear defective ones)
        return float(np.max(np.abs(np.linalg.eigvals(w))))
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, p)))
    z = w @ q
    est = prev = np.inf
    quiet = 0
    for _ in range(max_iter):
        ritz = np.linalg.eigvals(q.T @ z)
        est = float(np.max(np.abs(ritz)))
        if abs(est - prev) <= tol * max(est, _RHO_FLOOR):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
        prev = est
        q, _ = np.linalg.qr(z)
        z = w @ q
    return est


def rescale_spectral_radius(w, rho_target):
    """Return ``w * rho_target / rho(w)``.

    Raises:
        DegenerateMatrix: If ``rho(w) < 1e-12`` (zero or nilpotent matrices).
    """
    if not rho_target > 0:
        raise ConfigError("rho_target must be positive")
    rho = spectral_radius(w)
    if rho < _RHO_FLOOR:
        raise DegenerateMatrix(f"spectral radius {rho:.3g} is too small to rescale")
    return np.asarray(w, dtype=float) * (rho_target / rho)


def _draw(rng, dist, shape):
    if dist == "gaussian":
        return rng.standard_normal(shape)
    return rng.integers(-1, 2, size=shape).astype(float)


def init_weights(config: ReservoirConfig) -> ReservoirWeights:
    """Draw and condition the fixed reservoir matrices.

    Draw order from ``numpy.random.default_rng(config.seed)`` is
    ``w_in``, ``w_res``, ``w_bias``. The input and bias matrices are scaled by
    ``v_inp`` and ``v_bias``; the recurrent matrix is rescaled to
    ``rho_target``.
    """
    rng = np.random.default_rng(config.seed)
    w_in = _draw(rng, config.weight_dist, (config.n_r, config.n_i)) * config.v_inp
    w_res = _draw(rng, config.weight_dist, (config.n_r, config.n_r))
    w_bias = _draw(rng, config.weight_dist, (config.n_r,)) * config.v_bias
    w_res = rescale_spectral_radius(w_res, config.rho_target)
    return ReservoirWeights(w_in=w_in, w_res=w_res, w_bias=w_bias)


def update_state(w: ReservoirWeights, x, u, alpha: float) -> np.ndarray:
    """One reservoir step. ``x`` is left untouched."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (w.n_r,):
        raise DimensionMismatch(f"state has shape {x.shape}, expected ({w.n_r},)")
    if u.shape != (w.n_i,):
        raise DimensionMismatch(f"input has shape {u.shape}, expected ({w.n_i},)")
    drive = w.w_in @ u + w.w_res @ x + w.w_bias
    return np.tanh((1.0 - alpha) * x + alpha * drive)


def harvest_states(w: ReservoirWeights, episode_inputs, alpha: float) -> np.ndarray:
    """Run one episode from ``x(0) = 0``.

    Args:
        w: Reservoir weights.
        episode_inputs: Array ``(n_e, n_i)``; row ``t`` is ``u(t)``.
        alpha: Leak rate.

    Returns:
        Array ``(n_e, n_r)`` whose row ``t`` is ``x(t+1)``.
    """
    u = np.asarray(episode_inputs, dtype=float)
    if u.ndim != 2 or u.shape[0] == 0:
        raise DataError("episode inputs must be a non-empty (n_e, n_i) array")
    if u.shape[1] != w.n_i:
        raise DimensionMismatch(f"inputs have {u.shape[1]} columns, reservoir expects {w.n_i}")
    drive_in = u @ w.w_in.T + w.w_bias
    w_res_t = w.w_res.T
    states = np.empty((u.shape[0], w.n_r))
    x = np.zeros(w.n_r)
    for t in range(u.shape[0]):
        x = np.tanh((1.0 - alpha) * x + alpha * (drive_in[t] + x @ w_res_t))
        states[t] = x
    return states


def harvest_batch(
    w: ReservoirWeights, episodes: Sequence[np.ndarray], alpha: float
) -> list[np.ndarray]:
    """Run several episodes in lockstep; same result as :func:`harvest_states` per episode.

    Shorter episodes are zero-padded and their padded states discarded, so
    each episode still starts from the zero state and never sees another.
    """
    if len(episodes) == 0:
        return []
    arrs = [np.asarray(e, dtype=float) for e in episodes]
    for a in arrs:
        if a.ndim != 2 or a.shape[0] == 0:
            raise DataError("episode inputs must be non-empty (n_e, n_i) arrays")
        if a.shape[1] != w.n_i:
            raise DimensionMismatch(f"inputs have {a.shape[1]} columns, reservoir expects {w.n_i}")
    lengths = np.array([a.shape[0] for a in arrs])
    n_b, t_max = len(arrs), int(lengths.max())
    u = np.zeros((t_max, n_b, w.n_i))
    for b, a in enumerate(arrs):
        u[: a.shape[0], b] = a
    drive_in = u @ w.w_in.T + w.w_bias
    w_res_t = w.w_res.T
    states = np.empty((t_max, n_b, w.n_r))
    x = np.zeros((n_b, w.n_r))
    for t in range(t_max):
        x = np.tanh((1.0 - alpha) * x + alpha * (drive_in[t] + x @ w_res_t))
        states[t] = x
    return [states[: lengths[b], b].copy() for b in range(n_b)]


def readout(w_out, x):
    """Analog output ``w_out[:-1] . x + w_out[-1]``.

    ``x`` may be one state or a stack of states (one per row). The sign
    nonlinearity is left to thresholding downstream.
    """
    w_out = np.asarray(w_out, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != w_out.shape[0] - 1:
        raise DimensionMismatch(
            f"state dimension {x.shape[-1]} does not match readout of length {w_out.shape[0]}"
        )
    return x @ w_out[:-1] + w_out[-1]
