"""Self-organized subspace projection.

The first ``n_I`` normalized capacity samples of an episode form its initial
window. Windows of the training episodes are clustered with k-means; the
cluster of a new episode is encoded one-hot and fed to the reservoir as a
constant binary input for the whole episode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionMismatch, InsufficientData

N_INIT = 80
DEFAULT_K = 4


@dataclass(frozen=True)
class Centroids:
    """Fitted k-means model.

    ``inertia_history`` holds the within-cluster sum of squares after every
    assignment step; it never increases.
    """

    centers: np.ndarray
    inertia: float
    n_iter: int = 0
    inertia_history: tuple[float, ...] = ()

    def __post_init__(self):
        c = np.array(self.centers, dtype=float)
        if c.ndim != 2 or c.shape[0] < 1 or not np.all(np.isfinite(c)):
            raise DataError("centers must be a finite (k, n_I) array")
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def n_I(self) -> int:
        return self.centers.shape[1]


def initial_window(cap, n_I: int = N_INIT) -> np.ndarray:
    """First ``n_I`` samples of the (normalized) capacity series."""
    cap = np.asarray(cap, dtype=float)
    if cap.shape[0] < n_I:
        raise DataError(f"series has {cap.shape[0]} samples, initial window needs {n_I}")
    return cap[:n_I].copy()


def _sq_dists(x, centers):
    # (m, k) squared Euclidean distances, computed exactly rather than via the
    # expanded dot-product form so that ties stay ties
    return ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _kmeans_pp(x, k, rng):
    m = x.shape[0]
    centers = [x[rng.integers(m)]]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        idx = rng.choice(m, p=d2 / total) if total > 0 else rng.integers(m)
        centers.append(x[idx])
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _update(x, labels, k, centers):
    """Cluster means; an empty cluster takes the farthest point of the largest one."""
    labels = labels.copy()
    new = centers.copy()
    for j in range(k):
        members = labels == j
        if members.any():
            new[j] = x[members].mean(axis=0)
    for j in range(k):
        if np.any(labels == j):
            continue
        big = int(np.argmax(np.bincount(labels, minlength=k)))
        members = np.flatnonzero(labels == big)
        far = members[np.argmax(((x[members] - new[big]) ** 2).sum(axis=1))]
        labels[far] = j
        new[j] = x[far]
        new[big] = x[labels == big].mean(axis=0)
    return new, labels


def kmeans_fit(windows, k: int = DEFAULT_K, seed: int = 0, max_iter: int = 300, tol: float = 1e-12) -> Centroids:
    """Lloyd's algorithm with k-means++ seeding.

    Stops at an assignment fixpoint, when the inertia drops by less than
    ``tol`` in one iteration, or after ``max_iter`` iterations. The returned
    centers are always the means of their final members.

    Raises:
        InsufficientData: Fewer than ``k`` distinct windows.
    """
    x = np.asarray(windows, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatch("windows must be an (m, n_I) array")
    if k < 1:
        raise DataError("k must be at least 1")
    if x.shape[0] < k or np.unique(x, axis=0).shape[0] < k:
        raise InsufficientData(f"need at least {k} distinct windows, got {x.shape[0]}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(x, k, rng)
    labels = np.argmin(_sq_dists(x, centers), axis=1)
    history = [float(_sq_dists(x, centers)[np.arange(len(x)), labels].sum())]
    fixpoint = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        centers, labels = _update(x, labels, k, centers)
        d2 = _sq_dists(x, centers)
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(x)), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            fixpoint = True
            break
        labels = new_labels
        if history[-2] - history[-1] < tol:
            break
    if not fixpoint:
        centers, labels = _update(x, labels, k, centers)
    inertia = float(((x - centers[labels]) ** 2).sum())
    return Centroids(centers=centers, inertia=inertia, n_iter=n_iter, inertia_history=tuple(history))


def assign_cluster(window, centroids: Centroids) -> int:
    """Nearest center by squared Euclidean distance; ties go to the lowest index."""
    w = np.asarray(window, dtype=float)
    if w.shape != (centroids.n_I,):
        raise DimensionMismatch(f"window has shape {w.shape}, centers have length {centroids.n_I}")
    return int(np.argmin(((centroids.centers - w) ** 2).sum(axis=1)))


def one_hot(index: int, k: int) -> np.ndarray:
    if not 0 <= index < k:
        raise DataError(f"cluster index {index} out of range for k={k}")
    u2 = np.zeros(k)
    u2[index] = 1.0
    return u2
