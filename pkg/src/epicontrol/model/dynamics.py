"""Typed single-trajectory API over the simulation kernels."""

from __future__ import annotations

import numpy as np

from . import kernels
from .params import ModelParams
from .state import (
    IDX_ICU, IDX_ICUV, IDX_IV, IDX_I,
    CompartmentState, Observation, VaccinationStream,
)

LOG_WEIGHT_FLOOR = kernels.LOG_WEIGHT_FLOOR


def force_of_infection(state: CompartmentState, params: ModelParams, action: int) -> float:
    """Per-susceptible daily infection rate beta_a * (I + I_V) / N."""
    return params.beta_for(action) * state.infectious / params.population


def second_dose_allocation(v3: int, v4: int, daily_second: int) -> tuple[int, int]:
    """Split the day's second doses, prioritising V4 then V3.

    Returns (d3, d4) with d4 = min(daily_second, V4) and
    d3 = min(V3, daily_second - d4); any excess is dropped.
    """
    if v3 < 0 or v4 < 0 or daily_second < 0:
        raise ValueError("second-dose allocation requires nonnegative inputs")
    return kernels.second_dose_split(v3, v4, daily_second)


def icu_admission_prob_vaccinated(state: CompartmentState, params: ModelParams) -> float:
    """psi-weighted ICU admission probability across the V strata (0 if empty)."""
    v = np.array([state.V1, state.V2, state.V3, state.V4, state.V5], dtype=np.float64)
    return kernels.vaccinated_icu_prob(v, params.p_iu, params.psi_array)


def _kernel_args(params: ModelParams):
    return (params.p_ei, params.p_ir, params.p_iu, params.p_ur, params.p_vv,
            params.eps_array, params.psi_array, params.population)


def step(state: CompartmentState, params: ModelParams, action: int,
         vax: VaccinationStream, rng: np.random.Generator) -> CompartmentState:
    """Sample the day-t -> day-t+1 transition under the given action."""
    df, ds = vax.doses_on(state.day)
    nxt = kernels.step_batch(state.as_array().reshape(1, -1),
                             params.beta_for(action), *_kernel_args(params),
                             df, ds, params.exposure_form == "exponential", rng)
    return CompartmentState.from_array(nxt[0], state.day + 1)


def step_mean(state_counts: np.ndarray, params: ModelParams, action: int,
              daily_first: int, daily_second: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic mean-field transition on float state rows.

    Returns (next_counts, new_exposures); used by tests and the
    deterministic rollout mode.
    """
    counts = np.atleast_2d(np.asarray(state_counts, dtype=np.float64))
    return kernels.step_batch_mean(counts, params.beta_for(action),
                                   *_kernel_args(params), daily_first, daily_second,
                                   params.exposure_form == "exponential")


def observe(state: CompartmentState, params: ModelParams,
            rng: np.random.Generator) -> Observation:
    """Report ICU occupancy with NegBin(k, k/(k+H)) noise centred at H(t)."""
    y = kernels.negbin_draw(rng, params.k_obs, float(state.icu_load))
    return Observation(y=y, day=state.day)


def log_likelihood(y: Observation | int, state: CompartmentState,
                   params: ModelParams) -> float:
    """Exact NegBin log-pmf of the reported count given the latent state.

    Impossible observations (H = 0, y > 0) return the finite sentinel
    LOG_WEIGHT_FLOOR rather than -inf so particle weights stay usable.
    """
    yv = y.y if isinstance(y, Observation) else int(y)
    if yv < 0:
        raise ValueError(f"observation must be >= 0, got {yv}")
    return kernels.negbin_logpmf(yv, params.k_obs, float(state.icu_load))


def simulate(initial: CompartmentState, params: ModelParams, actions,
             vax: VaccinationStream, days: int,
             rng: np.random.Generator) -> tuple[list[CompartmentState], list[Observation]]:
    """Iterate step and observe for `days` days.

    actions[i] is deployed on day initial.day + i; the returned lists
    hold the post-transition states and their observations, one per day.
    """
    if days < 1:
        raise ValueError(f"days must be >= 1, got {days}")
    actions = list(actions)
    if len(actions) < days:
        raise ValueError(f"action sequence covers {len(actions)} days, need {days}")
    states: list[CompartmentState] = []
    obs: list[Observation] = []
    cur = initial
    for i in range(days):
        cur = step(cur, params, actions[i], vax, rng)
        states.append(cur)
        obs.append(observe(cur, params, rng))
    return states, obs


def icu_of_counts(counts: np.ndarray) -> np.ndarray:
    """Total ICU occupancy H for one state row or a batch."""
    c = np.asarray(counts)
    if c.ndim == 1:
        return c[IDX_ICU] + c[IDX_ICUV]
    return c[:, IDX_ICU] + c[:, IDX_ICUV]


def infectious_of_counts(counts: np.ndarray) -> np.ndarray:
    c = np.asarray(counts)
    if c.ndim == 1:
        return c[IDX_I] + c[IDX_IV]
    return c[:, IDX_I] + c[:, IDX_IV]
