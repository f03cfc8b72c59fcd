"""Cloud checkpoints: versioned JSON or npz, resumable mid-run.

Format (version 1): the outer thetas/weights/logliks, every inner
particle set, the assimilated history, and enough of the configuration
to rebuild the cloud.  JSON stores arrays as nested lists; npz stores
them natively with the scalar fields in a JSON header.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from ..model.params import ModelParams
from .particle_filter import InnerParticleSet
from .priors import PriorSpec
from .smc2 import PosteriorCloud, Smc2Config

FORMAT_VERSION = 1


def _header(cloud: PosteriorCloud) -> dict:
    return {
        "version": FORMAT_VERSION,
        "t": cloud.t,
        "base_params": dataclasses.asdict(cloud.base_params),
        "prior": dataclasses.asdict(cloud.prior),
        "config": dataclasses.asdict(cloud.config),
    }


def _rebuild(header: dict, arrays: dict) -> PosteriorCloud:
    if header.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {header.get('version')!r}")
    bp = dict(header["base_params"])
    for key in ("beta", "eps", "psi"):
        bp[key] = tuple(bp[key])
    prior = dict(header["prior"])
    prior["mu"] = tuple(prior["mu"])
    prior["sigma"] = tuple(prior["sigma"])
    n_theta = arrays["thetas"].shape[0]
    inners = []
    for i in range(n_theta):
        inners.append(InnerParticleSet(
            counts=arrays[f"inner_counts_{i}"].astype(np.int64),
            weights=arrays[f"inner_weights_{i}"],
            day=header["t"],
            loglik_increments=arrays[f"inner_increments_{i}"],
        ))
    return PosteriorCloud(
        thetas=arrays["thetas"], weights=arrays["weights"],
        inners=tuple(inners), logliks=arrays["logliks"], t=header["t"],
        base_params=ModelParams(**bp), prior=PriorSpec(**prior),
        config=Smc2Config(**header["config"]),
        x0=arrays["x0"].astype(np.int64),
        history_y=arrays["history_y"].astype(np.int64),
        history_a=arrays["history_a"].astype(np.int64))


def _arrays(cloud: PosteriorCloud) -> dict:
    arrays = {
        "thetas": cloud.thetas, "weights": cloud.weights,
        "logliks": cloud.logliks, "x0": cloud.x0,
        "history_y": cloud.history_y, "history_a": cloud.history_a,
    }
    for i, inner in enumerate(cloud.inners):
        arrays[f"inner_counts_{i}"] = inner.counts
        arrays[f"inner_weights_{i}"] = inner.weights
        arrays[f"inner_increments_{i}"] = inner.loglik_increments
    return arrays


def save_cloud(cloud: PosteriorCloud, path: str | Path, fmt: str = "npz") -> Path:
    path = Path(path)
    if fmt == "npz":
        np.savez_compressed(path, __header__=json.dumps(_header(cloud)),
                            **_arrays(cloud))
    elif fmt == "json":
        doc = _header(cloud)
        doc["arrays"] = {k: np.asarray(v).tolist() for k, v in _arrays(cloud).items()}
        path.write_text(json.dumps(doc))
    else:
        raise ValueError(f"checkpoint format must be 'npz' or 'json', got {fmt!r}")
    return path


def load_cloud(path: str | Path) -> PosteriorCloud:
    path = Path(path)
    if path.suffix == ".json" or path.read_bytes()[:1] == b"{":
        doc = json.loads(path.read_text())
        arrays = {k: np.asarray(v) for k, v in doc.pop("arrays").items()}
        return _rebuild(doc, arrays)
    with np.load(path, allow_pickle=False) as zf:
        header = json.loads(str(zf["__header__"]))
        arrays = {k: zf[k] for k in zf.files if k != "__header__"}
    return _rebuild(header, arrays)
