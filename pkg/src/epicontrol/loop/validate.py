"""Replay of a fixed action timeline under generator draws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import VaccinationStream
from ..model import kernels
from ..model.state import IDX_ICU, IDX_ICUV
from .generator import GeneratorSpec


@dataclass(frozen=True)
class ReplayBands:
    """Pointwise summary of simulated ICU occupancy H(t)."""

    mean: np.ndarray
    lo: np.ndarray            # 5th percentile
    hi: np.ndarray            # 95th percentile
    n_paths: int

    def to_json_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "lo": self.lo.tolist(),
                "hi": self.hi.tolist(), "n_paths": self.n_paths}


def validation_replay(generator: GeneratorSpec, actions,
                      vax: VaccinationStream, n_paths: int,
                      rng: np.random.Generator,
                      observe_noise: bool = False) -> ReplayBands:
    """Simulate n_paths trajectories under the given action timeline.

    Each path samples a (theta, state) world from the generator and
    propagates the latent dynamics; bands summarise H(t) pointwise with
    the mean and the 5-95% envelope.  With observe_noise the bands cover
    the reported counts instead (predictive bands, for comparison with
    an observed series).
    """
    actions = np.asarray(actions, dtype=np.int64)
    days = len(actions)
    if days < 1 or n_paths < 1:
        raise ValueError("need at least one day and one path")
    paths = np.empty((n_paths, days))
    for p in range(n_paths):
        params, state = generator.sample_world(rng)
        counts = state.as_array().reshape(1, -1)
        day = state.day
        for i in range(days):
            df, ds = vax.doses_on(day + i)
            counts = kernels.step_batch(
                counts, params.beta_for(int(actions[i])), params.p_ei,
                params.p_ir, params.p_iu, params.p_ur, params.p_vv,
                params.eps_array, params.psi_array, params.population,
                df, ds, params.exposure_form == "exponential", rng)
            h = counts[0, IDX_ICU] + counts[0, IDX_ICUV]
            if observe_noise:
                paths[p, i] = kernels.negbin_draw(rng, params.k_obs, float(h))
            else:
                paths[p, i] = h
    return ReplayBands(mean=paths.mean(axis=0),
                       lo=np.percentile(paths, 5, axis=0),
                       hi=np.percentile(paths, 95, axis=0),
                       n_paths=n_paths)
