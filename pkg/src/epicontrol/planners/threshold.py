"""ICU-threshold policy: grid search over triples with posterior rollouts.

A triple (tau1 < tau2 < tau3) maps the observed ICU load to one of the
four action levels; each decision block searches candidate triples by
averaging discounted rollout returns over K posterior draws, using
common random numbers across candidates to stabilise the argmax.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..inference.smc2 import PosteriorCloud, sample_posterior
from ..model import kernels
from ..model.dynamics import step_mean
from ..model.params import ModelParams
from ..model.state import CompartmentState, VaccinationStream
from ..rewards import RewardConfig, StreakCounter, intervention_cost, update_streak


@dataclass(frozen=True)
class ThresholdTriple:
    tau1: float
    tau2: float
    tau3: float

    def __post_init__(self):
        if not 0 < self.tau1 < self.tau2 < self.tau3:
            raise ValueError(f"thresholds must satisfy 0 < tau1 < tau2 < tau3, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.tau1, self.tau2, self.tau3], dtype=np.float64)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.tau1, self.tau2, self.tau3)


def threshold_policy(y: int, phi: ThresholdTriple) -> int:
    """Left-closed binning of the ICU load into action levels 1..4."""
    if y < phi.tau1:
        return 1
    if y < phi.tau2:
        return 2
    if y < phi.tau3:
        return 3
    return 4


@dataclass(frozen=True)
class ThresholdGrid:
    """Geometric threshold axis and its candidate triples.

    Axis values are rounded to integers since they are compared against
    integer ICU counts; `margin` is the per-threshold index window used
    when refining around the previous optimum.
    """

    axis: np.ndarray
    margin: int = 2

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=np.float64)
        if axis.ndim != 1 or len(axis) < 3:
            raise ValueError("axis needs at least 3 points")
        if np.any(np.diff(axis) <= 0):
            raise ValueError("axis must be strictly increasing")
        object.__setattr__(self, "axis", axis)

    @classmethod
    def geometric(cls, n_points: int = 30, lo: float = 10.0, hi: float = 8000.0,
                  margin: int = 2) -> "ThresholdGrid":
        axis = np.rint(np.geomspace(lo, hi, n_points))
        if np.any(np.diff(axis) <= 0):
            raise ValueError("rounded geometric axis is not strictly increasing")
        return cls(axis=axis, margin=margin)

    def all_triples(self) -> list[ThresholdTriple]:
        """Every strictly increasing triple, in lexicographic order."""
        return [ThresholdTriple(*combo)
                for combo in itertools.combinations(self.axis.tolist(), 3)]

    def _window(self, value: float) -> np.ndarray:
        idx = int(np.argmin(np.abs(self.axis - value)))
        lo = max(0, idx - self.margin)
        hi = min(len(self.axis), idx + self.margin + 1)
        return self.axis[lo:hi]

    def neighborhood(self, center: ThresholdTriple) -> list[ThresholdTriple]:
        """Triples within `margin` axis indices of the previous optimum."""
        w1 = self._window(center.tau1)
        w2 = self._window(center.tau2)
        w3 = self._window(center.tau3)
        out = []
        for t1 in w1.tolist():
            for t2 in w2.tolist():
                if t2 <= t1:
                    continue
                for t3 in w3.tolist():
                    if t3 <= t2:
                        continue
                    out.append(ThresholdTriple(t1, t2, t3))
        return out

    def candidates(self, previous_opt: ThresholdTriple | None = None) -> list[ThresholdTriple]:
        if previous_opt is None:
            return self.all_triples()
        return self.neighborhood(previous_opt)


def rollout_cost(theta: ModelParams, x0: CompartmentState, phi: ThresholdTriple,
                 horizon: int, cfg: RewardConfig, vax: VaccinationStream,
                 rng: np.random.Generator, *, y0: int,
                 streak: StreakCounter = StreakCounter(), t0: int | None = None,
                 observe_noise: bool = True, deterministic: bool = False) -> float:
    """Discounted return of an H-day rollout under the threshold rule.

    The first day's observation is anchored to the real y0; afterwards
    the action is re-evaluated daily from the simulated observation.
    `deterministic=True` propagates the mean-field dynamics with exact
    observations (used by tests and sanity checks).
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    t_start = x0.day if t0 is None else int(t0)
    vax.check_covers(t_start)
    vax.check_covers(t_start + horizon - 1)
    if deterministic:
        return _rollout_mean(theta, x0, phi, horizon, cfg, vax, y0, streak, t_start)
    ret, _, _, _ = kernels.rollout(
        x0.as_array(), int(y0), streak.runs_array(), phi.as_array(), 0,
        theta.beta_array, theta.p_ei, theta.p_ir, theta.p_iu, theta.p_ur,
        theta.p_vv, theta.eps_array, theta.psi_array, theta.population,
        vax.daily_first, vax.daily_second, t_start, int(horizon), theta.k_obs,
        cfg.gamma, cfg.kappa_icu, cfg.kappa_soec, float(cfg.t_crash),
        cfg.p_crash, theta.exposure_form == "exponential", observe_noise, rng)
    return float(ret)


def _rollout_mean(theta, x0, phi, horizon, cfg, vax, y0, streak, t0) -> float:
    counts = x0.as_array().astype(np.float64).reshape(1, -1)
    y = float(y0)
    c = streak
    ret = 0.0
    disc = 1.0
    for rel in range(horizon):
        a = threshold_policy(y, phi)
        c = update_streak(c, a)
        if y > cfg.t_crash:
            r = -cfg.p_crash
        else:
            r = -cfg.kappa_icu * y - cfg.kappa_soec * intervention_cost(a, c.ell)
        ret += disc * r
        disc *= cfg.gamma
        df, ds = vax.doses_on(t0 + rel)
        counts, _ = step_mean(counts, theta, a, df, ds)
        y = float(counts[0, 4] + counts[0, 13])
    return ret


def rollout_fixed_action(theta: ModelParams, x0: CompartmentState, action: int,
                         horizon: int, cfg: RewardConfig, vax: VaccinationStream,
                         rng: np.random.Generator, *, y0: int,
                         streak: StreakCounter = StreakCounter(),
                         t0: int | None = None,
                         observe_noise: bool = True) -> tuple[float, np.ndarray]:
    """Hold one action for the whole horizon; returns (return, ICU path).

    Used by the what-if forecasts so an operator compares pure
    alternatives rather than policy rollouts.
    """
    if not 1 <= action <= 4:
        raise ValueError(f"action must be in 1..4, got {action}")
    t_start = x0.day if t0 is None else int(t0)
    ret, _, icu_path, _ = kernels.rollout(
        x0.as_array(), int(y0), streak.runs_array(),
        np.array([1.0, 2.0, 3.0]), int(action),
        theta.beta_array, theta.p_ei, theta.p_ir, theta.p_iu, theta.p_ur,
        theta.p_vv, theta.eps_array, theta.psi_array, theta.population,
        vax.daily_first, vax.daily_second, t_start, int(horizon), theta.k_obs,
        cfg.gamma, cfg.kappa_icu, cfg.kappa_soec, float(cfg.t_crash),
        cfg.p_crash, theta.exposure_form == "exponential", observe_noise, rng)
    return float(ret), icu_path


def select_best(candidates: list[ThresholdTriple], scores: np.ndarray) -> ThresholdTriple:
    """Argmax with ties broken toward the lexicographically smallest triple.

    Candidates are generated in lexicographic order, so keeping the first
    strict improvement implements the tie-break; adding any constant to
    all scores leaves the selection unchanged.
    """
    best_i = 0
    for i in range(1, len(candidates)):
        if scores[i] > scores[best_i]:
            best_i = i
    return candidates[best_i]


def plan_block(cloud: PosteriorCloud, grid: ThresholdGrid, k: int, horizon: int,
               cfg: RewardConfig, vax: VaccinationStream,
               rng: np.random.Generator, *, y0: int,
               streak: StreakCounter = StreakCounter(),
               previous_opt: ThresholdTriple | None = None,
               observe_noise: bool = True) -> ThresholdTriple:
    """Pick the best threshold triple for the block starting at cloud.t.

    Draws K posterior (theta, state) pairs, scores every candidate by
    the mean rollout return with common random numbers across candidates
    at the same draw index, and returns the argmax.
    """
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    pairs = sample_posterior(cloud, k, rng)
    crn_seeds = [int(s) for s in rng.integers(0, 2**62, size=k)]
    candidates = grid.candidates(previous_opt)
    scores = np.empty(len(candidates))
    for ci, phi in enumerate(candidates):
        total = 0.0
        for j, (theta, state) in enumerate(pairs):
            total += rollout_cost(theta, state, phi, horizon, cfg, vax,
                                  np.random.default_rng(crn_seeds[j]),
                                  y0=y0, streak=streak, t0=cloud.t,
                                  observe_noise=observe_noise)
        scores[ci] = total / k
    return select_best(candidates, scores)
