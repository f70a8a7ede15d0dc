"""Model artifact: a zip archive of ``.npy`` members plus ``meta.json``.

Layout (format version 1)::

    meta.json     format tag, version, kind ("reservoir" | "reference"),
                  variant, reservoir config, lambda, threshold, n_I,
                  use_setpoint, normalization maxima, k-means summary
    w_in.npy      (n_r, n_i)
    w_res.npy     (n_r, n_r)
    w_bias.npy    (n_r,)
    w_out.npy     (n_r + 1,)  last entry is the output bias
    centers.npy   (k, n_I)    only with subspace projection

Members are stored uncompressed with a fixed timestamp, so the same model
always produces the same bytes. Floats in ``meta.json`` use the shortest
round-trip representation and arrays are float64, so loading is lossless.
Since every member is ``.npy``-compatible the file also opens with
``numpy.load`` for inspection.
"""

from __future__ import annotations

import dataclasses
import io
import json
import zipfile
from pathlib import Path

import numpy as np

from .clustering import Centroids
from .dataset import NormStats
from .errors import DataError
from .evaluation import ReferenceModel
from .readout import TrainedModel
from .reservoir import ReservoirConfig, ReservoirWeights

FORMAT = "steadyrc-model"
VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)


def _put(zf: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    zf.writestr(info, data)


def _npy(arr) -> bytes:
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.ascontiguousarray(arr, dtype=np.float64), version=(1, 0), allow_pickle=False)
    return buf.getvalue()


def save_model(model, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {"format": FORMAT, "version": VERSION, "variant": model.variant, "threshold": float(model.threshold)}
    arrays = {}
    if isinstance(model, ReferenceModel):
        meta.update(kind="reference", fixed_sample=int(model.fixed_sample), dt=float(model.dt))
    elif isinstance(model, TrainedModel):
        meta.update(
            kind="reservoir",
            config=dataclasses.asdict(model.config),
            seed=model.config.seed,
            lam=float(model.lam),
            n_I=int(model.n_I),
            use_setpoint=bool(model.use_setpoint),
            norm_stats=None if model.norm_stats is None else dataclasses.asdict(model.norm_stats),
            centroids=None
            if model.centroids is None
            else {"k": model.centroids.k, "inertia": model.centroids.inertia, "n_iter": model.centroids.n_iter},
        )
        arrays = {
            "w_in": model.weights.w_in,
            "w_res": model.weights.w_res,
            "w_bias": model.weights.w_bias,
            "w_out": model.w_out,
        }
        if model.centroids is not None:
            arrays["centers"] = model.centroids.centers
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    with zipfile.ZipFile(path, "w") as zf:
        _put(zf, "meta.json", (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode())
        for name in sorted(arrays):
            _put(zf, f"{name}.npy", _npy(arrays[name]))
    return path


def load_model(path):
    """Inverse of :func:`save_model`; returns a ``TrainedModel`` or ``ReferenceModel``."""
    try:
        with zipfile.ZipFile(path) as zf:
            meta = json.loads(zf.read("meta.json"))
            arrays = {
                n[:-4]: np.lib.format.read_array(io.BytesIO(zf.read(n)), allow_pickle=False)
                for n in zf.namelist()
                if n.endswith(".npy")
            }
    except (OSError, KeyError, ValueError, zipfile.BadZipFile) as exc:
        raise DataError(f"cannot read model artifact {path}: {exc}") from None
    if meta.get("format") != FORMAT or meta.get("version") != VERSION:
        raise DataError(f"{path}: unsupported artifact format {meta.get('format')} v{meta.get('version')}")
    if meta["kind"] == "reference":
        return ReferenceModel(
            fixed_sample=meta["fixed_sample"], dt=meta["dt"], variant=meta["variant"], threshold=meta["threshold"]
        )
    centroids = None
    if meta["centroids"] is not None:
        c = meta["centroids"]
        centroids = Centroids(centers=arrays["centers"], inertia=c["inertia"], n_iter=c["n_iter"])
    return TrainedModel(
        variant=meta["variant"],
        config=ReservoirConfig(**meta["config"]),
        weights=ReservoirWeights(w_in=arrays["w_in"], w_res=arrays["w_res"], w_bias=arrays["w_bias"]),
        w_out=arrays["w_out"],
        lam=meta["lam"],
        norm_stats=None if meta["norm_stats"] is None else NormStats(**meta["norm_stats"]),
        centroids=centroids,
        threshold=meta["threshold"],
        n_I=meta["n_I"],
        use_setpoint=meta["use_setpoint"],
    )
