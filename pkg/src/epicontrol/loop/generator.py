"""Counterfactual data generator and its environment.

The generator holds joint draws of transmission rates (from the full-
series posterior, or ground truth in synthetic runs) together with
latent states at the decision start; each replicate samples one world
from it and the decision loop deploys actions against that world.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..inference import PriorSpec, Smc2Config, sample_posterior, smc2_assimilate, init_cloud
from ..model import CompartmentState, ModelParams, VaccinationStream
from ..model import kernels
from ..model.state import IDX_ICU, IDX_ICUV


@dataclass(frozen=True)
class GeneratorSpec:
    """Rate draws plus matched latent states at the decision start day."""

    thetas: np.ndarray            # (n, 4)
    weights: np.ndarray           # (n,), normalized
    states: np.ndarray            # (n, 14) latent state draw per theta
    day0: int                     # decision-start day the states refer to
    base_params: ModelParams

    def __post_init__(self):
        if self.thetas.shape[0] != self.states.shape[0] or len(self.weights) != len(self.thetas):
            raise ValueError("thetas, weights, and states must align")
        if np.any(np.diff(self.thetas, axis=1) >= 0):
            raise ValueError("generator draws must satisfy the beta ordering")

    @classmethod
    def from_truth(cls, params: ModelParams, state: CompartmentState) -> "GeneratorSpec":
        return cls(thetas=np.asarray(params.beta, dtype=float).reshape(1, 4),
                   weights=np.ones(1), states=state.as_array().reshape(1, -1),
                   day0=state.day, base_params=params)

    def sample_world(self, rng: np.random.Generator) -> tuple[ModelParams, CompartmentState]:
        i = int(rng.choice(len(self.weights), p=self.weights))
        params = self.base_params.with_beta(self.thetas[i])
        state = CompartmentState.from_array(self.states[i], day=self.day0)
        return params, state


def fit_generator(icu_series, historical_actions, vax: VaccinationStream,
                  base_params: ModelParams, x0: np.ndarray,
                  config: Smc2Config, rng: np.random.Generator,
                  prior: PriorSpec | None = None,
                  state_day: int | None = None,
                  n_draws: int = 50, return_cloud: bool = False):
    """Assimilate the full observed series and package posterior draws.

    icu_series[i] is the observation for day i+1 under
    historical_actions[i] deployed on day i.  Latent states are sampled
    from the cloud when it passes `state_day` (default: the end of the
    series), giving initial conditions consistent with the data up to
    the decision start.
    """
    ys = np.asarray(icu_series, dtype=np.int64)
    actions = np.asarray(historical_actions, dtype=np.int64)
    if len(actions) < len(ys):
        raise ValueError("need one historical action per observed day")
    if state_day is None:
        state_day = len(ys)
    prior = prior or PriorSpec()
    cloud = init_cloud(prior, base_params, x0, config, rng)
    states_at_day0: list[np.ndarray] | None = None
    pairs_rng = None
    if state_day == 0:
        states_at_day0 = [np.asarray(x0, dtype=np.int64)] * n_draws
    for i, y in enumerate(ys):
        cloud = smc2_assimilate(cloud, int(y), int(actions[i]), vax, rng)
        if cloud.t == state_day:
            pairs_rng = rng
            pairs = sample_posterior(cloud, n_draws, pairs_rng)
            states_at_day0 = [s.as_array() for _, s in pairs]
    if states_at_day0 is None:
        raise ValueError(f"state_day {state_day} outside the assimilated window")
    draws = sample_posterior(cloud, n_draws, rng)
    thetas = np.stack([np.asarray(p.beta) for p, _ in draws])
    states = np.stack(states_at_day0)
    spec = GeneratorSpec(thetas=thetas, weights=np.full(n_draws, 1.0 / n_draws),
                         states=states, day0=int(state_day),
                         base_params=base_params)
    return (spec, cloud) if return_cloud else spec


def save_generator(spec: GeneratorSpec, path) -> None:
    import dataclasses as _dc
    import json as _json
    np.savez_compressed(path, thetas=spec.thetas, weights=spec.weights,
                        states=spec.states, day0=np.int64(spec.day0),
                        base_params=_json.dumps(_dc.asdict(spec.base_params)))


def load_generator(path) -> GeneratorSpec:
    import json as _json
    with np.load(path, allow_pickle=False) as zf:
        bp = _json.loads(str(zf["base_params"]))
        for key in ("beta", "eps", "psi"):
            bp[key] = tuple(bp[key])
        return GeneratorSpec(thetas=zf["thetas"], weights=zf["weights"],
                             states=zf["states"].astype(np.int64),
                             day0=int(zf["day0"]),
                             base_params=ModelParams(**bp))


class CounterfactualEnv:
    """One simulated 'true world' the decision loop deploys actions into."""

    def __init__(self, params: ModelParams, state: CompartmentState,
                 vax: VaccinationStream, rng: np.random.Generator,
                 observe_noise: bool = True):
        self.params = params
        self.vax = vax
        self.rng = rng
        self.observe_noise = observe_noise
        self._counts = state.as_array()
        self.day = state.day

    @property
    def state(self) -> CompartmentState:
        return CompartmentState.from_array(self._counts, self.day)

    def deploy(self, action: int, days: int) -> np.ndarray:
        """Advance `days` days under a fixed action; returns the new
        observations (one per day, reported after each transition)."""
        ys = np.empty(days, dtype=np.int64)
        for i in range(days):
            df, ds = self.vax.doses_on(self.day)
            self._counts = kernels.step_batch(
                self._counts.reshape(1, -1), self.params.beta_for(action),
                self.params.p_ei, self.params.p_ir, self.params.p_iu,
                self.params.p_ur, self.params.p_vv, self.params.eps_array,
                self.params.psi_array, self.params.population, df, ds,
                self.params.exposure_form == "exponential", self.rng)[0]
            self.day += 1
            h = float(self._counts[IDX_ICU] + self._counts[IDX_ICUV])
            if self.observe_noise:
                ys[i] = kernels.negbin_draw(self.rng, self.params.k_obs, h)
            else:
                ys[i] = int(round(h))
        return ys
