"""Self-contained synthetic scenario for desk-scale experiments.

Builds a ground-truth world (rates, initial state, vaccination ramp, a
plausible pre-decision action timeline), simulates the warm-up window,
and packages everything the decision loop needs.  All randomness derives
from the scenario seed, so paired planner comparisons share one world.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import CompartmentState, ModelParams, VaccinationStream, simulate
from ..model.params import DEFAULT_BETA
from ..rng import STREAM_WORLD, derive
from .config import RunConfig

# Lognormal jitter applied to the nominal rates per replicate world.
TRUE_BETA_JITTER = 0.10


@dataclass(frozen=True)
class SyntheticScenario:
    """Ground truth plus the observable history handed to the agent."""

    true_params: ModelParams
    x0: CompartmentState                 # day-0 state
    x_start: CompartmentState            # true latent state at decision start
    vax: VaccinationStream
    warmup_ys: np.ndarray                # observations for days 1..warmup
    warmup_actions: np.ndarray           # deployed on days 0..warmup-1
    historical_actions: np.ndarray       # baseline timeline over the decision window
    start_day: int

    @property
    def y_start(self) -> int:
        """Observation anchoring the first decision."""
        return int(self.warmup_ys[-1]) if len(self.warmup_ys) else 0


def _vaccination_ramp(cfg: RunConfig) -> VaccinationStream:
    """First doses ramp in halfway through the warm-up; seconds lag 20 days."""
    total_days = cfg.warmup_days + cfg.t_horizon + cfg.horizon + cfg.delta
    first = np.zeros(total_days, dtype=np.int64)
    second = np.zeros(total_days, dtype=np.int64)
    start = max(1, cfg.warmup_days // 2)
    daily = max(1, cfg.population // 500)
    first[start:] = daily
    second[start + 20:] = max(1, int(0.7 * daily))
    return VaccinationStream(first, second)


def _warmup_actions(warmup_days: int) -> np.ndarray:
    """First-wave shape that exercises every level: free growth, mild
    closures, lockdown, stepped relaxation back to no measures.
    Deploying all four levels in the warm-up is what makes the early
    posterior informative about the strong-intervention rates; ending
    relaxed leaves a rebound in motion at the decision start."""
    acts = np.ones(warmup_days, dtype=np.int64)
    acts[int(warmup_days * 0.30):] = 2
    acts[int(warmup_days * 0.45):] = 4
    acts[int(warmup_days * 0.65):] = 3
    acts[int(warmup_days * 0.80):] = 1
    return acts


def _historical_actions(cfg: RunConfig) -> np.ndarray:
    """Stylised government-like timeline: escalate, hold, relax.

    Levels change only at block boundaries so the historical planner can
    reproduce the timeline exactly under blockwise deployment.
    """
    n_blocks = cfg.n_blocks
    levels = np.ones(n_blocks, dtype=np.int64)
    levels[n_blocks // 6: n_blocks // 3] = 2
    levels[n_blocks // 3: n_blocks // 2] = 3
    levels[n_blocks // 2: 2 * n_blocks // 3] = 2
    levels[5 * n_blocks // 6:] = 2
    return np.repeat(levels, cfg.delta)


def make_scenario(cfg: RunConfig, replicate: int = 0) -> SyntheticScenario:
    rng = derive(cfg.seed, replicate, STREAM_WORLD)
    jitter = np.exp(rng.normal(0.0, TRUE_BETA_JITTER, size=4))
    beta = np.sort(np.asarray(DEFAULT_BETA) * jitter)[::-1]
    true_params = ModelParams(population=cfg.population,
                              beta=tuple(float(b) for b in beta),
                              exposure_form=cfg.exposure_form)
    e0, i0 = cfg.seed_counts()
    x0 = CompartmentState.seeded(cfg.population, exposed=e0, infectious=i0)
    vax = _vaccination_ramp(cfg)
    actions = _warmup_actions(cfg.warmup_days)
    if cfg.warmup_days > 0:
        states, obs = simulate(x0, true_params, actions.tolist(), vax,
                               cfg.warmup_days, rng)
        x_start = states[-1]
        ys = np.array([o.y for o in obs], dtype=np.int64)
    else:
        x_start = x0
        ys = np.zeros(0, dtype=np.int64)
    return SyntheticScenario(
        true_params=true_params, x0=x0, x_start=x_start, vax=vax,
        warmup_ys=ys, warmup_actions=actions,
        historical_actions=_historical_actions(cfg),
        start_day=cfg.warmup_days)
