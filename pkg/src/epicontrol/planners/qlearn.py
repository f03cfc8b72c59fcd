"""Posterior-averaged tabular Q-learning over geometric ICU bins.

Each posterior draw trains its own table on simulated episodes; tables
are averaged pointwise across draws and the block action is the greedy
choice of the averaged table at the current ICU bin.  Episode-wise
sup-norm changes of the averaged table drive the stopping rule.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..model import kernels
from ..model.params import ModelParams, N_ACTIONS
from ..model.state import CompartmentState, VaccinationStream
from ..rewards import RewardConfig, StreakCounter


@dataclass(frozen=True)
class BinScheme:
    """Half-open ICU bins [THR_{g-1}, THR_g) with THR_0 = 0, THR_G = inf."""

    thresholds: np.ndarray

    def __post_init__(self):
        thr = np.asarray(self.thresholds, dtype=np.float64)
        if thr.ndim != 1 or len(thr) < 1:
            raise ValueError("need at least one threshold")
        if np.any(np.diff(thr) <= 0) or thr[0] <= 0:
            raise ValueError("thresholds must be positive and strictly increasing")
        object.__setattr__(self, "thresholds", thr)

    @property
    def n_bins(self) -> int:
        return len(self.thresholds) + 1

    @classmethod
    def geometric(cls, n_bins: int = 200, lo: float = 1.0, hi: float = 6000.0) -> "BinScheme":
        return cls(np.geomspace(lo, hi, n_bins - 1))


def bin_of(y: int, scheme: BinScheme) -> int:
    """1-based bin index of an observation; total and monotone in y."""
    if y < 0:
        raise ValueError(f"observation must be >= 0, got {y}")
    return 1 + kernels.bin_index(scheme.thresholds, y)


@dataclass
class QTable:
    """Action values and visit counts over (bin, action) cells."""

    values: np.ndarray
    visits: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.visits = np.asarray(self.visits, dtype=np.int64)
        if self.values.shape != self.visits.shape or self.values.ndim != 2:
            raise ValueError("values and visits must share a (G, A) shape")
        if not np.isfinite(self.values).all():
            raise ValueError("table values must be finite")
        if (self.visits < 0).any():
            raise ValueError("visit counts must be nonnegative")

    @classmethod
    def zeros(cls, n_bins: int, n_actions: int = N_ACTIONS) -> "QTable":
        return cls(np.zeros((n_bins, n_actions)), np.zeros((n_bins, n_actions), dtype=np.int64))

    def copy(self) -> "QTable":
        return QTable(self.values.copy(), self.visits.copy())

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def greedy_actions(self) -> np.ndarray:
        """1-based greedy action per bin (ties toward the lowest level)."""
        return 1 + np.argmax(self.values, axis=1)


def q_update(q: QTable, g: int, a: int, r_slice: float, g_next: int,
             alpha: float, gamma: float) -> QTable:
    """One temporally aggregated update; touches exactly the (g, a) cell."""
    n_bins, n_actions = q.shape
    if not (1 <= g <= n_bins and 1 <= g_next <= n_bins):
        raise ValueError(f"bin index out of range 1..{n_bins}")
    if not 1 <= a <= n_actions:
        raise ValueError(f"action out of range 1..{n_actions}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    cur = q.values[g - 1, a - 1]
    target = r_slice + gamma * q.values[g_next - 1].max()
    q.values[g - 1, a - 1] = cur + alpha * (target - cur)
    q.visits[g - 1, a - 1] += 1
    return q


def slice_reward(daily_rewards, delta: int) -> float:
    """Plain sum of the delta daily rewards accrued under one action."""
    rewards = list(daily_rewards)
    if len(rewards) != delta:
        raise ValueError(f"slice needs exactly {delta} daily rewards, got {len(rewards)}")
    return float(sum(rewards))


def bayes_average(tables: list[QTable]) -> QTable:
    """Pointwise mean of the per-draw tables (visits are summed)."""
    if not tables:
        raise ValueError("need at least one table")
    shape = tables[0].shape
    if any(t.shape != shape for t in tables):
        raise ValueError("tables must share one shape")
    values = np.mean([t.values for t in tables], axis=0)
    visits = np.sum([t.visits for t in tables], axis=0)
    return QTable(values, visits)


def select_block_action(qbar: QTable, y: int, scheme: BinScheme) -> int:
    """Greedy action of the averaged table at the current ICU bin."""
    g = bin_of(y, scheme)
    return 1 + int(np.argmax(qbar.values[g - 1]))


@dataclass(frozen=True)
class LearnSchedule:
    """Exploration and learning-rate schedule for one training run."""

    episodes: int = 2000
    eps0: float = 0.20
    eps_min: float = 0.05
    alpha_c: float = 45.0
    decay_fraction: float = 0.8     # linear decay span as a fraction of episodes
    alpha_indexing: str = "visit"   # 'visit' or 'episode'

    def __post_init__(self):
        if not 0.0 <= self.eps_min <= self.eps0 <= 1.0:
            raise ValueError("need 0 <= eps_min <= eps0 <= 1")
        if self.alpha_c <= 0 or self.episodes < 0:
            raise ValueError("alpha_c must be > 0 and episodes >= 0")
        if self.alpha_indexing not in ("visit", "episode"):
            raise ValueError("alpha_indexing must be 'visit' or 'episode'")

    def epsilon_at(self, episode: int) -> float:
        span = max(1, int(self.decay_fraction * self.episodes))
        frac = min(episode / span, 1.0)
        return self.eps0 + (self.eps_min - self.eps0) * frac

    def alpha_at(self, k: int) -> float:
        return self.alpha_c / (self.alpha_c + k)


class DrawTrainer:
    """Episode-stepped Q training for a single posterior draw."""

    def __init__(self, theta: ModelParams, state: CompartmentState, y0: int,
                 q_start: QTable, schedule: LearnSchedule, scheme: BinScheme,
                 cfg: RewardConfig, vax: VaccinationStream, t0: int,
                 horizon: int, delta: int, streak: StreakCounter,
                 rng: np.random.Generator, observe_noise: bool = True):
        if horizon % delta != 0:
            raise ValueError(f"horizon {horizon} must be a multiple of delta {delta}")
        vax.check_covers(t0)
        vax.check_covers(t0 + horizon - 1)
        self.theta = theta
        self.counts0 = state.as_array()
        self.y0 = int(y0)
        self.table = q_start.copy()
        self.schedule = schedule
        self.scheme = scheme
        self.cfg = cfg
        self.vax = vax
        self.t0 = int(t0)
        self.horizon = int(horizon)
        self.delta = int(delta)
        self.runs0 = streak.runs_array()
        self.rng = rng
        self.observe_noise = observe_noise
        self.episode = 0

    def advance_episode(self) -> None:
        eps = self.schedule.epsilon_at(self.episode)
        episode_k = self.episode + 1 if self.schedule.alpha_indexing == "episode" else -1
        kernels.q_episode(
            self.counts0, self.y0, self.runs0, self.table.values,
            self.table.visits, self.scheme.thresholds, self.theta.beta_array,
            self.theta.p_ei, self.theta.p_ir, self.theta.p_iu, self.theta.p_ur,
            self.theta.p_vv, self.theta.eps_array, self.theta.psi_array,
            self.theta.population, self.vax.daily_first, self.vax.daily_second,
            self.t0, self.horizon, self.delta, eps, self.schedule.alpha_c,
            episode_k, self.theta.k_obs, self.cfg.gamma, self.cfg.kappa_icu,
            self.cfg.kappa_soec, float(self.cfg.t_crash), self.cfg.p_crash,
            self.theta.exposure_form == "exponential", self.observe_noise,
            self.rng)
        self.episode += 1


def train_one_draw(theta: ModelParams, state: CompartmentState, y0: int,
                   q_start: QTable, schedule: LearnSchedule, scheme: BinScheme,
                   cfg: RewardConfig, vax: VaccinationStream, t0: int,
                   horizon: int, delta: int, rng: np.random.Generator,
                   streak: StreakCounter = StreakCounter(),
                   observe_noise: bool = True) -> QTable:
    """Run `schedule.episodes` episodes from one posterior draw.

    Each episode restarts the epidemic at the draw's latent state but
    keeps the table from the previous episode.
    """
    trainer = DrawTrainer(theta, state, y0, q_start, schedule, scheme, cfg,
                          vax, t0, horizon, delta, streak, rng, observe_noise)
    for _ in range(schedule.episodes):
        trainer.advance_episode()
    return trainer.table


@dataclass
class ConvergenceReport:
    """Episode-wise diagnostics of the posterior-averaged table."""

    max_delta: np.ndarray            # sup-norm change of the averaged table
    policy_change: np.ndarray        # fraction of bins whose greedy action changed
    converged_at: int | None = None
    normalizer: float = 0.0

    def to_json(self) -> str:
        return json.dumps({
            "max_delta": self.max_delta.tolist(),
            "policy_change_fraction": self.policy_change.tolist(),
            "converged_at": self.converged_at,
            "normalizer": self.normalizer,
        })


def find_convergence_episode(max_delta: np.ndarray, policy_change: np.ndarray,
                             tol_rel: float = 1e-4, patience: int = 50,
                             policy_tol: float = 0.01,
                             normalizer_window: int = 2000) -> tuple[int | None, float]:
    """First episode at which the stopping rule fires.

    Converged at episode e when max_delta/normalizer stayed below
    tol_rel and the greedy policy changed on fewer than policy_tol of
    bins for `patience` consecutive episodes; the normalizer is the
    largest sup-norm change seen over the first `normalizer_window`
    episodes (or all episodes so far when earlier).
    """
    streak = 0
    normalizer = 0.0
    for e in range(len(max_delta)):
        if e < normalizer_window:
            normalizer = max(normalizer, float(max_delta[e]))
        small = (max_delta[e] == 0.0
                 or (normalizer > 0.0 and max_delta[e] / normalizer < tol_rel))
        streak = streak + 1 if (small and policy_change[e] < policy_tol) else 0
        if streak >= patience:
            return e, normalizer
    return None, normalizer


def convergence_check(report: ConvergenceReport, tol_rel: float = 1e-4,
                      patience: int = 50, policy_tol: float = 0.01) -> bool:
    episode, _ = find_convergence_episode(report.max_delta, report.policy_change,
                                          tol_rel, patience, policy_tol)
    return episode is not None


def train_posterior_averaged(draws, y0: int, q_start: QTable,
                             schedule: LearnSchedule, scheme: BinScheme,
                             cfg: RewardConfig, vax: VaccinationStream,
                             t0: int, horizon: int, delta: int,
                             rngs, streak: StreakCounter = StreakCounter(),
                             observe_noise: bool = True,
                             stop_early: bool = True,
                             tol_rel: float = 1e-4, patience: int = 50,
                             policy_tol: float = 0.01) -> tuple[QTable, ConvergenceReport]:
    """Train one table per draw, episode-synchronously, and average.

    Tracks the averaged table after every episode so the sup-norm decay
    and policy-stability diagnostics refer to the quantity actually used
    for the decision.  With stop_early, training halts once the stopping
    rule fires (all draws stop at the same episode index).
    """
    draws = list(draws)
    if len(rngs) != len(draws):
        raise ValueError("need one RNG stream per posterior draw")
    trainers = [DrawTrainer(theta, state, y0, q_start, schedule, scheme, cfg,
                            vax, t0, horizon, delta, streak, rng, observe_noise)
                for (theta, state), rng in zip(draws, rngs)]
    k = len(trainers)
    qbar_prev = q_start.values.copy()
    greedy_prev = 1 + np.argmax(qbar_prev, axis=1)
    deltas, changes = [], []
    converged_at = None
    normalizer = 0.0
    streak_len = 0
    for e in range(schedule.episodes):
        acc = np.zeros_like(qbar_prev)
        for tr in trainers:
            tr.advance_episode()
            acc += tr.table.values
        qbar = acc / k
        deltas.append(float(np.abs(qbar - qbar_prev).max()))
        greedy = 1 + np.argmax(qbar, axis=1)
        changes.append(float(np.mean(greedy != greedy_prev)))
        qbar_prev = qbar
        greedy_prev = greedy
        if e < 2000:
            normalizer = max(normalizer, deltas[-1])
        small = (deltas[-1] == 0.0
                 or (normalizer > 0.0 and deltas[-1] / normalizer < tol_rel))
        streak_len = streak_len + 1 if (small and changes[-1] < policy_tol) else 0
        if streak_len >= patience:
            converged_at = e
            if stop_early:
                break
    report = ConvergenceReport(np.asarray(deltas), np.asarray(changes),
                               converged_at, normalizer)
    qbar_table = bayes_average([tr.table for tr in trainers])
    return qbar_table, report


class NaiveQAgent:
    """Model-free online baseline: one TD update per decision block.

    No posterior sampling and no planning rollouts; the table sees only
    the B realised block transitions of a run.
    """

    def __init__(self, scheme: BinScheme, schedule: LearnSchedule,
                 gamma: float, n_actions: int = N_ACTIONS):
        self.scheme = scheme
        self.schedule = schedule
        self.gamma = gamma
        self.table = QTable.zeros(scheme.n_bins, n_actions)
        self.n_updates = 0
        self._pending: tuple[int, int] | None = None

    def choose(self, y: int, block_index: int, rng: np.random.Generator) -> int:
        g = bin_of(y, self.scheme)
        eps = self.schedule.epsilon_at(block_index)
        if rng.random() < eps:
            a = 1 + int(rng.integers(0, self.table.shape[1]))
        else:
            a = 1 + int(np.argmax(self.table.values[g - 1]))
        self._pending = (g, a)
        return a

    def update(self, r_slice: float, y_next: int) -> None:
        if self._pending is None:
            raise RuntimeError("choose() must precede update()")
        g, a = self._pending
        g2 = bin_of(y_next, self.scheme)
        if self.schedule.alpha_indexing == "visit":
            k = int(self.table.visits[g - 1, a - 1]) + 1
        else:
            k = self.n_updates + 1
        q_update(self.table, g, a, r_slice, g2, self.schedule.alpha_at(k), self.gamma)
        self.n_updates += 1
        self._pending = None


def qtable_to_csv(q: QTable, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["g", "a", "value", "visits"])
        for g in range(q.shape[0]):
            for a in range(q.shape[1]):
                writer.writerow([g + 1, a + 1, repr(float(q.values[g, a])),
                                 int(q.visits[g, a])])
    return path


def qtable_from_csv(path: str | Path) -> QTable:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    n_bins = max(int(r["g"]) for r in rows)
    n_actions = max(int(r["a"]) for r in rows)
    q = QTable.zeros(n_bins, n_actions)
    for r in rows:
        q.values[int(r["g"]) - 1, int(r["a"]) - 1] = float(r["value"])
        q.visits[int(r["g"]) - 1, int(r["a"]) - 1] = int(r["visits"])
    return q
