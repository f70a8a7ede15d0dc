"""Episodes: labels, normalization, splitting, file I/O and a synthetic generator.

An episode is one compressor performance test sampled every ``dt`` seconds
with three analog channels (cooling capacity, shell temperature, suction
pressure) and a known suction-pressure reference.

Steady state is defined on the capacity signal: a sample is inside the band
when ``cap(t)`` lies within +/-2% of the final capacity ``cap_f`` (mean of the
last 45 minutes) *and* the pressure is within +/-1% of its reference. The
target switches once, at the earliest sample after which every sample is in
the band. Both intervals are closed.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, EpisodeTooShort, NoSteadyState, ZeroMaximum

DT = 10.0
FINAL_WINDOW_MINUTES = 45.0
CAP_MARGIN = 0.02
SETPOINT_MARGIN = 0.01
DEFAULT_RATIOS = (0.6, 0.2, 0.2)


def compute_setpoint_indicator(pressure, ref: float) -> np.ndarray:
    """1 where ``pressure`` is inside ``[ref*0.99, ref*1.01]``, else 0."""
    if not ref > 0:
        raise DataError(f"reference pressure must be positive, got {ref}")
    p = np.asarray(pressure, dtype=float)
    lo, hi = ref * (1 - SETPOINT_MARGIN), ref * (1 + SETPOINT_MARGIN)
    return ((p >= lo) & (p <= hi)).astype(np.int8)


def final_window_samples(dt: float = DT) -> int:
    return int(round(FINAL_WINDOW_MINUTES * 60.0 / dt))


def compute_final_capacity(cap, dt: float = DT) -> float:
    """Mean capacity over the last 45 minutes (270 samples at 10 s)."""
    cap = np.asarray(cap, dtype=float)
    n = final_window_samples(dt)
    if cap.shape[0] < n:
        raise EpisodeTooShort(f"episode has {cap.shape[0]} samples, need at least {n}")
    return float(np.mean(cap[-n:]))


def generate_labels(cap, setpoint, cap_f: float) -> tuple[np.ndarray, int]:
    """Single-switch steady-state target.

    Returns:
        ``(y_hat, t_d)`` where ``t_d`` is the earliest sample such that every
        later sample is inside the capacity band with the setpoint reached;
        ``y_hat`` is -1 before ``t_d`` and +1 from ``t_d`` on.

    Raises:
        NoSteadyState: The last sample is already outside the band.
    """
    cap = np.asarray(cap, dtype=float)
    setpoint = np.asarray(setpoint)
    if cap.shape != setpoint.shape:
        raise DataError("cap and setpoint lengths differ")
    inside = (cap >= cap_f * (1 - CAP_MARGIN)) & (cap <= cap_f * (1 + CAP_MARGIN)) & (setpoint == 1)
    if cap.size == 0 or not inside[-1]:
        raise NoSteadyState("capacity does not end inside the steady-state band")
    outside = np.flatnonzero(~inside)
    t_d = int(outside[-1]) + 1 if outside.size else 0
    y_hat = np.where(np.arange(cap.size) >= t_d, 1, -1).astype(np.int8)
    return y_hat, t_d


@dataclass
class Episode:
    """One performance test.

    ``setpoint`` is derived from ``pressure`` and ``ref`` on construction when
    not given. The label fields (``cap_f``, ``y_hat``, ``t_d``) stay ``None``
    until :func:`label_episode` runs, which unlabeled prediction inputs never
    need.
    """

    id: str
    model_tag: str
    cap: np.ndarray
    shell_temp: np.ndarray
    pressure: np.ndarray
    ref: float
    dt: float = DT
    setpoint: np.ndarray | None = None
    cap_f: float | None = None
    y_hat: np.ndarray | None = None
    t_d: int | None = None
    normalized: bool = False

    def __post_init__(self):
        self.cap = np.asarray(self.cap, dtype=float)
        self.shell_temp = np.asarray(self.shell_temp, dtype=float)
        self.pressure = np.asarray(self.pressure, dtype=float)
        n = self.cap.shape[0]
        if self.cap.ndim != 1 or self.shell_temp.shape != (n,) or self.pressure.shape != (n,):
            raise DataError(f"episode {self.id}: series must be 1-D with equal lengths")
        if self.setpoint is None:
            self.setpoint = compute_setpoint_indicator(self.pressure, self.ref)

    @property
    def n_e(self) -> int:
        return self.cap.shape[0]

    @property
    def labeled(self) -> bool:
        return self.y_hat is not None


def label_episode(ep: Episode) -> Episode:
    """Attach ``cap_f``, ``y_hat`` and ``t_d`` (computed on the given units)."""
    try:
        cap_f = compute_final_capacity(ep.cap, ep.dt)
        y_hat, t_d = generate_labels(ep.cap, ep.setpoint, cap_f)
    except DataError as exc:
        raise type(exc)(f"episode {ep.id}: {exc}") from None
    return dataclasses.replace(ep, cap_f=cap_f, y_hat=y_hat, t_d=t_d)


@dataclass(frozen=True)
class NormStats:
    """Per-variable maxima over the training split."""

    cap: float
    shell_temp: float
    pressure: float

    def __post_init__(self):
        for name in ("cap", "shell_temp", "pressure"):
            if not getattr(self, name) > 0:
                raise ZeroMaximum(f"training maximum of {name} must be positive")

    @classmethod
    def from_episodes(cls, episodes: Iterable[Episode]) -> "NormStats":
        episodes = list(episodes)
        if not episodes:
            raise DataError("cannot compute normalization statistics from no episodes")
        if any(ep.normalized for ep in episodes):
            raise DataError("normalization statistics must come from raw episodes")
        return cls(
            cap=float(max(ep.cap.max() for ep in episodes)),
            shell_temp=float(max(ep.shell_temp.max() for ep in episodes)),
            pressure=float(max(ep.pressure.max() for ep in episodes)),
        )


def normalize(episodes: Sequence[Episode], stats: NormStats) -> list[Episode]:
    """Divide every channel by its training maximum; values above 1 are kept.

    ``ref`` is divided by the pressure maximum and ``cap_f`` by the capacity
    maximum. The binary setpoint indicator is carried over unchanged.
    """
    out = []
    for ep in episodes:
        if ep.normalized:
            raise DataError(f"episode {ep.id} is already normalized")
        out.append(
            dataclasses.replace(
                ep,
                cap=ep.cap / stats.cap,
                shell_temp=ep.shell_temp / stats.shell_temp,
                pressure=ep.pressure / stats.pressure,
                ref=ep.ref / stats.pressure,
                cap_f=None if ep.cap_f is None else ep.cap_f / stats.cap,
                normalized=True,
            )
        )
    return out


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]
    ratios: tuple[float, float, float] = DEFAULT_RATIOS
    seed: int = 0

    def assignment(self) -> dict[str, str]:
        out = {i: "train" for i in self.train}
        out.update({i: "val" for i in self.val})
        out.update({i: "test" for i in self.test})
        return out


def split_dataset(ids: Sequence[str], ratios=DEFAULT_RATIOS, seed: int = 0) -> DatasetSplit:
    """Seeded shuffle, then contiguous train/val/test blocks."""
    ids = list(ids)
    if len(ids) < 5:
        raise DataError("need at least 5 episodes to split")
    if len(set(ids)) != len(ids):
        raise DataError("episode ids must be unique")
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or min(ratios) < 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"split ratios must be three non-negative numbers summing to 1, got {ratios}")
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    n_train = int(round(ratios[0] * len(ids)))
    n_val = int(round(ratios[1] * len(ids)))
    return DatasetSplit(
        train=tuple(shuffled[:n_train]),
        val=tuple(shuffled[n_train : n_train + n_val]),
        test=tuple(shuffled[n_train + n_val :]),
        ratios=ratios,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Synthetic corpus


@dataclass(frozen=True)
class Archetype:
    """Nominal behaviour of one synthetic compressor model.

    Capacity follows ``cap_final * (1 + A exp(-t/tau) (1 + B sin(2 pi t/P + phi)))``
    plus white noise; shell temperature is a first-order rise; suction
    pressure settles onto ``ref`` with a damped oscillation. Times are in
    minutes, the noise levels are relative to the signal (°C for shell).
    Per-episode values are drawn around the nominal ones by a factor
    uniform in ``[1 - jitter, 1 + jitter]``.
    """

    tag: str
    cap_final: float
    amplitude: float
    tau: float
    osc_amp: float = 0.0
    osc_period: float = 20.0
    noise: float = 0.002
    shell_start: float = 30.0
    shell_final: float = 65.0
    shell_tau: float = 15.0
    shell_noise: float = 0.05
    ref: float = 1.0
    p_overshoot: float = 0.08
    p_tau: float = 5.0
    p_period: float = 8.0
    p_noise: float = 0.001
    excursion_prob: float = 0.0
    duration: tuple[float, float] = (90.0, 270.0)
    jitter: float = 0.0


def synthesize_episode(archetype: Archetype, seed, episode_id: str | None = None, dt: float = DT) -> Episode:
    """Draw and label one synthetic episode.

    Raises:
        NoSteadyState: The draw never settles for good.
        DataError: The draw starts inside the band (no transition to detect).
    """
    a = archetype
    rng = np.random.default_rng(seed)

    def jit(value):
        return value * rng.uniform(1 - a.jitter, 1 + a.jitter) if a.jitter > 0 else value

    cap_final, amp, tau = jit(a.cap_final), jit(a.amplitude), jit(a.tau)
    shell_tau, p_tau = jit(a.shell_tau), jit(a.p_tau)
    lo, hi = a.duration
    minutes = rng.uniform(lo, hi) if hi > lo else lo
    n_e = int(minutes * 60.0 / dt)
    t = np.arange(n_e) * dt / 60.0

    phase = rng.uniform(0, 2 * np.pi)
    osc = a.osc_amp * np.sin(2 * np.pi * t / a.osc_period + phase)
    cap = cap_final * (1 + amp * np.exp(-t / tau) * (1 + osc))
    cap = cap + cap_final * a.noise * rng.standard_normal(n_e)

    shell = a.shell_final - (a.shell_final - a.shell_start) * np.exp(-t / shell_tau)
    shell = shell + a.shell_noise * rng.standard_normal(n_e)

    pressure = a.ref * (1 + a.p_overshoot * np.exp(-t / p_tau) * np.cos(2 * np.pi * t / a.p_period))
    if rng.uniform() < a.excursion_prob:
        # temporary loss of pressure control, setpoint drops out for a few minutes
        start = rng.uniform(15.0, 45.0)
        length = rng.uniform(2.0, 6.0)
        size = rng.uniform(0.02, 0.04) * rng.choice([-1.0, 1.0])
        pressure = pressure + a.ref * size * ((t >= start) & (t < start + length))
    pressure = pressure + a.ref * a.p_noise * rng.standard_normal(n_e)

    ep = Episode(
        id=episode_id or a.tag,
        model_tag=a.tag,
        cap=cap,
        shell_temp=shell,
        pressure=pressure,
        ref=a.ref,
        dt=dt,
    )
    ep = label_episode(ep)
    if ep.t_d == 0:
        raise DataError(f"episode {ep.id} starts in steady state")
    return ep


ARCHETYPE_RANGES = {
    "cap_final": (150.0, 1200.0),
    "amplitude": (0.06, 0.8),
    "tau": (4.0, 15.0),
    "osc_amp": (0.0, 0.3),
    "osc_period": (10.0, 30.0),
    "noise": (0.001, 0.003),
    "shell_start": (25.0, 40.0),
    "shell_final": (55.0, 80.0),
    "shell_tau_ratio": (1.0, 1.6),
    "ref": (0.5, 2.0),
    "p_overshoot": (0.05, 0.2),
    "p_tau": (2.0, 35.0),
    "p_noise": (0.0002, 0.0005),
    "p_period_ratio": (1.5, 3.0),
}


def make_archetypes(n: int = 24, seed: int = 0, negative_share: float = 0.3, **ranges) -> list[Archetype]:
    """A pool of ``n`` distinct compressor models spanning a wide operating range.

    Each nominal parameter is drawn uniformly from its entry in
    :data:`ARCHETYPE_RANGES`; keyword arguments replace individual ranges.
    ``negative_share`` of the models approach their final capacity from below.
    """
    unknown = set(ranges) - set(ARCHETYPE_RANGES)
    if unknown:
        raise ValueError(f"unknown archetype ranges: {sorted(unknown)}")
    r = {**ARCHETYPE_RANGES, **ranges}
    rng = np.random.default_rng(seed)
    pool = []
    for i in range(n):
        d = {name: rng.uniform(lo, hi) for name, (lo, hi) in r.items()}
        amplitude = d["amplitude"] * (-1.0 if rng.uniform() < negative_share else 1.0)
        # keep at least an hour of steady tail after the nominal settling time
        settle = 1.1 * d["tau"] * np.log(abs(amplitude) * (1 + d["osc_amp"]) / CAP_MARGIN)
        settle = max(settle, 1.1 * d["p_tau"] * np.log(d["p_overshoot"] / SETPOINT_MARGIN))
        shortest = min(240.0, max(90.0, settle + 60.0))
        pool.append(
            Archetype(
                tag=f"M{i:02d}",
                cap_final=d["cap_final"],
                amplitude=amplitude,
                tau=d["tau"],
                osc_amp=d["osc_amp"],
                osc_period=d["osc_period"],
                noise=d["noise"],
                shell_start=d["shell_start"],
                shell_final=d["shell_final"],
                shell_tau=d["tau"] * d["shell_tau_ratio"],
                ref=d["ref"],
                p_overshoot=d["p_overshoot"],
                p_tau=d["p_tau"],
                p_noise=d["p_noise"],
                # slow oscillation relative to its decay: one band entry, a second
                # one only after a strong overshoot
                p_period=2.0 * d["p_tau"] * d["p_period_ratio"],
                excursion_prob=0.1,
                duration=(shortest, min(270.0, max(210.0, shortest + 30.0))),
                jitter=0.1,
            )
        )
    return pool


def synthesize_corpus(
    n_episodes: int,
    n_archetypes: int = 24,
    seed: int = 0,
    archetypes: Sequence[Archetype] | None = None,
    max_attempts: int = 50,
    **ranges,
) -> list[Episode]:
    """Round-robin over the archetype pool; rejected draws are redrawn.

    Episode ``i`` uses seed ``(seed, i, attempt)``, so a corpus is
    reproducible and any single episode can be regenerated on its own.
    """
    pool = list(archetypes) if archetypes is not None else make_archetypes(n_archetypes, seed, **ranges)
    episodes = []
    for i in range(n_episodes):
        arch = pool[i % len(pool)]
        for attempt in range(max_attempts):
            try:
                ep = synthesize_episode(arch, [seed, i, attempt], episode_id=f"ep{i:04d}")
                break
            except DataError:
                continue
        else:
            raise DataError(f"archetype {arch.tag} failed to produce a valid episode")
        episodes.append(ep)
    return episodes


# ---------------------------------------------------------------------------
# Files: one CSV per episode plus a JSON sidecar, and a manifest CSV

EPISODE_COLUMNS = ("t_index", "cap", "shell_temp", "pressure")
MANIFEST_COLUMNS = ("id", "path", "split")


def write_episode(ep: Episode, directory) -> Path:
    """Write ``<id>.csv`` and ``<id>.json``; floats use shortest round-trip repr."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{ep.id}.csv"
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(EPISODE_COLUMNS)
        for t in range(ep.n_e):
            w.writerow((t, repr(float(ep.cap[t])), repr(float(ep.shell_temp[t])), repr(float(ep.pressure[t]))))
    sidecar = {"id": ep.id, "model_tag": ep.model_tag, "ref": float(ep.ref), "dt": float(ep.dt)}
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def read_episode(path, label: bool = True) -> Episode:
    """Load an episode CSV and its sidecar; label it unless ``label=False``."""
    path = Path(path)
    sidecar_path = path.with_suffix(".json")
    try:
        meta = json.loads(sidecar_path.read_text())
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = tuple(next(reader))
            rows = [r for r in reader if r]
    except (OSError, ValueError, StopIteration) as exc:
        raise DataError(f"cannot read episode {path}: {exc}") from None
    if header != EPISODE_COLUMNS:
        raise DataError(f"{path}: expected columns {EPISODE_COLUMNS}, got {header}")
    data = np.array([[float(v) for v in r[1:]] for r in rows], dtype=float).reshape(-1, 3)
    ep = Episode(
        id=str(meta["id"]),
        model_tag=str(meta.get("model_tag", "")),
        cap=data[:, 0],
        shell_temp=data[:, 1],
        pressure=data[:, 2],
        ref=float(meta["ref"]),
        dt=float(meta.get("dt", DT)),
    )
    return label_episode(ep) if label else ep


@dataclass
class ManifestEntry:
    id: str
    path: Path
    split: str = ""


def write_manifest(path, entries: Sequence[ManifestEntry]) -> None:
    """Paths are written relative to the manifest's directory when possible."""
    path = Path(path)
    base = path.parent.resolve()
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(MANIFEST_COLUMNS)
        for e in entries:
            p = Path(e.path).resolve()
            try:
                p = p.relative_to(base)
            except ValueError:
                pass
            w.writerow((e.id, p.as_posix(), e.split))


def read_manifest(path) -> list[ManifestEntry]:
    path = Path(path)
    try:
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from None
    entries = []
    for r in rows:
        p = Path(r["path"])
        if not p.is_absolute():
            p = path.parent / p
        entries.append(ManifestEntry(id=r["id"], path=p, split=(r.get("split") or "").strip()))
    return entries


def split_from_manifest(entries: Sequence[ManifestEntry]) -> DatasetSplit | None:
    """The split recorded in a manifest, or ``None`` if any entry lacks one."""
    if not entries or any(e.split not in ("train", "val", "test") for e in entries):
        return None
    return DatasetSplit(
        train=tuple(e.id for e in entries if e.split == "train"),
        val=tuple(e.id for e in entries if e.split == "val"),
        test=tuple(e.id for e in entries if e.split == "test"),
    )


def write_corpus(episodes: Sequence[Episode], directory, split: DatasetSplit | None = None) -> Path:
    """Write every episode under ``directory/episodes`` and a ``manifest.csv``."""
    directory = Path(directory)
    assign = split.assignment() if split is not None else {}
    entries = [
        ManifestEntry(id=ep.id, path=write_episode(ep, directory / "episodes"), split=assign.get(ep.id, ""))
        for ep in episodes
    ]
    manifest = directory / "manifest.csv"
    write_manifest(manifest, entries)
    return manifest
