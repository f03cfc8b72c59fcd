"""Daily reward, intervention cost, and the stringency streak counter.

The reward trades ICU burden against an action- and duration-dependent
socio-economic cost, with a flat catastrophic penalty once the reported
ICU load exceeds the crash threshold:

    r(y, a, ell) = -P_crash                            if y > T_crash
                   -kappa_icu * y - kappa_soec * C(a, ell)   otherwise

    C(1, ell) = 0
    C(2, ell) = 50 * ln(1 + ell)
    C(3, ell) = 200 * ell
    C(4, ell) = 800 * ell

ell is the number of consecutive days (up to and including today) on
which the deployed action was at least as strict as today's; ell = 0
whenever the action is 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model.params import N_ACTIONS

# Crash constants used by the unit-level reward definition.
DEFAULT_CRASH_THRESHOLD = 6000
DEFAULT_CRASH_PENALTY = 1.0e5

# Stricter crash constants used by the experiment presets.
EXPERIMENT_CRASH_THRESHOLD = 5000
EXPERIMENT_CRASH_PENALTY = 1.0e6

DEFAULT_GAMMA = 0.95


@dataclass(frozen=True)
class RewardConfig:
    kappa_icu: float = 1.0
    kappa_soec: float = 0.2
    t_crash: int = DEFAULT_CRASH_THRESHOLD
    p_crash: float = DEFAULT_CRASH_PENALTY
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        if self.kappa_icu < 0 or self.kappa_soec < 0:
            raise ValueError("reward weights must be nonnegative")
        if self.t_crash < 0 or self.p_crash <= 0:
            raise ValueError("crash threshold must be >= 0 and penalty > 0")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")

    @classmethod
    def experiment(cls, kappa_soec: float = 0.2, gamma: float = DEFAULT_GAMMA) -> "RewardConfig":
        return cls(kappa_icu=1.0, kappa_soec=kappa_soec,
                   t_crash=EXPERIMENT_CRASH_THRESHOLD,
                   p_crash=EXPERIMENT_CRASH_PENALTY, gamma=gamma)


def _check_action(a: int) -> None:
    if not 1 <= a <= N_ACTIONS:
        raise ValueError(f"action level must be in 1..{N_ACTIONS}, got {a}")


def intervention_cost(a: int, ell: int, base: float = math.e) -> float:
    """Socio-economic burden C(a, ell) of day `ell` under action a."""
    _check_action(a)
    if ell < 0:
        raise ValueError(f"streak length must be >= 0, got {ell}")
    if a == 1:
        return 0.0
    if a == 2:
        return 50.0 * math.log1p(ell) / math.log(base)
    if a == 3:
        return 200.0 * ell
    return 800.0 * ell


def reward(y: int, a: int, ell: int, cfg: RewardConfig) -> float:
    """Daily reward for reported ICU load y under action a with streak ell."""
    _check_action(a)
    if y < 0:
        raise ValueError(f"observation must be >= 0, got {y}")
    if y > cfg.t_crash:
        return -cfg.p_crash
    return -cfg.kappa_icu * y - cfg.kappa_soec * intervention_cost(a, ell)


@dataclass(frozen=True)
class StreakCounter:
    """Streak state after deploying `current_action` today.

    `runs` holds the trailing run lengths of days with deployed action
    >= L for L in (2, 3, 4); `ell` is the streak for the current action
    (0 whenever current_action == 1).
    """

    current_action: int = 1
    ell: int = 0
    runs: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        _check_action(self.current_action)
        if self.current_action == 1 and self.ell != 0:
            raise ValueError("ell must be 0 when the action is 1")
        if self.ell < 0 or any(r < 0 for r in self.runs):
            raise ValueError("streak lengths must be nonnegative")

    def runs_array(self) -> np.ndarray:
        return np.array(self.runs, dtype=np.int64)

    @classmethod
    def from_runs(cls, runs, action: int) -> "StreakCounter":
        runs = tuple(int(r) for r in runs)
        ell = 0 if action == 1 else runs[action - 2]
        return cls(current_action=action, ell=ell, runs=runs)


def update_streak(counter: StreakCounter, new_action: int) -> StreakCounter:
    """Advance the streak by one deployed day of `new_action`."""
    _check_action(new_action)
    runs = list(counter.runs)
    for level in (2, 3, 4):
        runs[level - 2] = runs[level - 2] + 1 if new_action >= level else 0
    return StreakCounter.from_runs(runs, new_action)


def replay_streaks(actions) -> list[int]:
    """Streak lengths ell_t for a full deployed action sequence."""
    c = StreakCounter()
    out = []
    for a in actions:
        c = update_streak(c, int(a))
        out.append(c.ell)
    return out
