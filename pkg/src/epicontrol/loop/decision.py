"""The blockwise decision loop over a counterfactual world.

Per block: plan from the current posterior belief (planner-dependent),
deploy the chosen action for delta days in the counterfactual
environment, record rewards with streak tracking, then assimilate the
delta new observations.  Plans never see observations beyond the block
boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..inference import PriorSpec, Smc2Config, sample_posterior, smc2_assimilate, warm_start
from ..planners import (
    BinScheme,
    LearnSchedule,
    NaiveQAgent,
    QTable,
    ThresholdGrid,
    ThresholdTriple,
    bin_of,
    plan_block,
    select_block_action,
    threshold_policy,
    train_posterior_averaged,
)
from ..rewards import RewardConfig, StreakCounter, reward, update_streak
from ..rng import STREAM_INFER, STREAM_PLAN, STREAM_WORLD, derive, replicate_seed
from .config import RunConfig
from .generator import CounterfactualEnv, GeneratorSpec
from .synthetic import SyntheticScenario, make_scenario

POSTERIOR_PLANNERS = ("threshold", "qlearn")


@dataclass(frozen=True)
class BlockRecord:
    block: int
    t0: int
    action: int
    artifact: dict = field(default_factory=dict)
    beta_quantiles: list | None = None


@dataclass
class DecisionTrace:
    """Daily (y, a, ell, r) records plus per-block artifacts."""

    planner: str
    seed: int
    replicate: int
    y: np.ndarray
    actions: np.ndarray
    ell: np.ndarray
    rewards: np.ndarray
    blocks: list[BlockRecord] = field(default_factory=list)
    overrides: list[bool] = field(default_factory=list)
    convergence_curves: dict[int, list[float]] = field(default_factory=dict)

    @property
    def total_reward(self) -> float:
        return float(self.rewards.sum())

    def crash_count(self, cfg: RewardConfig) -> int:
        return int((self.y > cfg.t_crash).sum())

    def action_occupancy(self) -> dict[int, float]:
        return {a: float((self.actions == a).mean()) for a in (1, 2, 3, 4)}

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["day", "y", "action", "ell", "reward"])
            for i in range(len(self.y)):
                w.writerow([i, int(self.y[i]), int(self.actions[i]),
                            int(self.ell[i]), repr(float(self.rewards[i]))])
        return path

    def block_json(self) -> list[dict]:
        out = []
        for b in self.blocks:
            out.append({"block": b.block, "t0": b.t0, "action": b.action,
                        "artifact": b.artifact, "beta_quantiles": b.beta_quantiles})
        return out


def trace_from_csv(path: str | Path, planner: str = "unknown",
                   seed: int = 0, replicate: int = 0) -> DecisionTrace:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    return DecisionTrace(
        planner=planner, seed=seed, replicate=replicate,
        y=np.array([int(r["y"]) for r in rows]),
        actions=np.array([int(r["action"]) for r in rows]),
        ell=np.array([int(r["ell"]) for r in rows]),
        rewards=np.array([float(r["reward"]) for r in rows]))


class DecisionRunner:
    """Resumable block-by-block execution of one replicate.

    The batch loop accepts every recommendation; the interactive service
    wraps the same runner and lets a human accept or override, so an
    accept-all session reproduces the batch trace bit-exactly.
    """

    def __init__(self, cfg: RunConfig, scenario: SyntheticScenario | None = None,
                 generator: GeneratorSpec | None = None, replicate: int = 0,
                 warm_cloud=None):
        self.cfg = cfg
        self.replicate = replicate
        self.root = replicate_seed(cfg.seed, replicate)
        self.scenario = scenario or make_scenario(cfg, replicate)
        self.vax = self.scenario.vax
        gen = generator or GeneratorSpec.from_truth(self.scenario.true_params,
                                                    self.scenario.x_start)
        world_rng = derive(self.root, STREAM_WORLD, 1)
        env_params, env_state = gen.sample_world(world_rng)
        self.generator = gen
        self.env = CounterfactualEnv(env_params, env_state, self.vax,
                                     derive(self.root, STREAM_WORLD, 2),
                                     observe_noise=cfg.observe_counterfactual)

        self.start_day = self.scenario.start_day
        self.y_current = self.scenario.y_start
        self.streak = StreakCounter()
        for a in self.scenario.warmup_actions:
            self.streak = update_streak(self.streak, int(a))

        self.cloud = None
        if cfg.planner in POSTERIOR_PLANNERS:
            if warm_cloud is not None:
                if warm_cloud.t != self.start_day:
                    raise ValueError(
                        f"warm cloud at day {warm_cloud.t}, expected {self.start_day}")
                self.cloud = warm_cloud
            else:
                self.cloud = warm_start(
                    PriorSpec(), self.scenario.warmup_ys.tolist(),
                    self.scenario.warmup_actions.tolist(), self.vax,
                    cfg.base_params(), self.scenario.x0.as_array(),
                    self.smc2_config(), derive(self.root, STREAM_INFER))

        self.grid = ThresholdGrid.geometric(cfg.grid.n_points, cfg.grid.lo,
                                            cfg.grid.hi, cfg.grid.margin)
        self.bins = BinScheme.geometric(cfg.bins.n_bins, cfg.bins.lo, cfg.bins.hi)
        self.schedule = LearnSchedule(episodes=cfg.episodes,
                                      eps0=cfg.schedule.eps0,
                                      eps_min=cfg.schedule.eps_min,
                                      alpha_c=cfg.schedule.alpha_c,
                                      decay_fraction=cfg.schedule.decay_fraction,
                                      alpha_indexing=cfg.schedule.alpha_indexing)
        self.naive_agent = NaiveQAgent(self.bins, self.schedule, cfg.reward.gamma) \
            if cfg.planner == "naive_q" else None
        self.previous_opt: ThresholdTriple | None = None
        self.qbar: QTable | None = None
        self.last_report = None

        self.block = 0
        self.records: list[BlockRecord] = []
        self.days_y: list[int] = []
        self.days_a: list[int] = []
        self.days_ell: list[int] = []
        self.days_r: list[float] = []
        self.overrides: list[bool] = []
        self.convergence_curves: dict[int, list[float]] = {}
        self.pending: dict | None = None
        self._plan_next()

    # -- planning -----------------------------------------------------------

    def smc2_config(self) -> Smc2Config:
        return Smc2Config(n_theta=self.cfg.n_theta, n_x=self.cfg.n_x,
                          n_moves=self.cfg.smc2_moves,
                          ess_fraction=self.cfg.smc2_ess_fraction)

    @property
    def finished(self) -> bool:
        return self.block >= self.cfg.n_blocks

    @property
    def t0(self) -> int:
        return self.start_day + self.block * self.cfg.delta

    def _beta_quantiles(self):
        if self.cloud is None:
            return None
        return self.cloud.beta_quantiles().tolist()

    def _plan_next(self) -> None:
        if self.finished:
            self.pending = None
            return
        cfg = self.cfg
        rng = derive(self.root, STREAM_PLAN, self.block)
        artifact: dict = {}
        if cfg.planner == "threshold":
            phi = plan_block(self.cloud, self.grid, cfg.k_draws, cfg.horizon,
                             cfg.reward, self.vax, rng, y0=self.y_current,
                             streak=self.streak, previous_opt=self.previous_opt)
            self.previous_opt = phi
            action = threshold_policy(self.y_current, phi)
            artifact = {"thresholds": list(phi.as_tuple())}
        elif cfg.planner == "qlearn":
            draws = sample_posterior(self.cloud, cfg.k_draws, rng)
            rngs = [derive(self.root, STREAM_PLAN, self.block, 100 + j)
                    for j in range(cfg.k_draws)]
            q_start = self.qbar if self.qbar is not None \
                else QTable.zeros(self.bins.n_bins)
            qbar, report = train_posterior_averaged(
                draws, self.y_current, q_start, self.schedule, self.bins,
                cfg.reward, self.vax, self.t0, cfg.horizon, cfg.delta, rngs,
                streak=self.streak,
                stop_early=cfg.convergence.stop_early,
                tol_rel=cfg.convergence.tol_rel,
                patience=cfg.convergence.patience,
                policy_tol=cfg.convergence.policy_tol)
            self.qbar = qbar
            self.last_report = report
            self.convergence_curves[self.block] = report.max_delta.tolist()
            action = select_block_action(qbar, self.y_current, self.bins)
            g = bin_of(self.y_current, self.bins)
            artifact = {
                "q_row": qbar.values[g - 1].tolist(),
                "bin": g,
                "episodes": len(report.max_delta),
                "converged_at": report.converged_at,
                "max_delta_final": float(report.max_delta[-1]) if len(report.max_delta) else None,
            }
        elif cfg.planner == "random":
            action = 1 + int(rng.integers(0, 4))
        elif cfg.planner == "historical":
            action = int(self.scenario.historical_actions[self.block * cfg.delta])
        elif cfg.planner == "naive_q":
            action = self.naive_agent.choose(self.y_current, self.block, rng)
        else:
            raise AssertionError(cfg.planner)
        self.pending = {"action": int(action), "artifact": artifact,
                        "beta_quantiles": self._beta_quantiles()}

    # -- deployment ---------------------------------------------------------

    def step(self, action: int | None = None) -> None:
        """Deploy one block (the recommendation unless overridden)."""
        if self.finished or self.pending is None:
            raise RuntimeError("decision loop already finished")
        cfg = self.cfg
        recommended = self.pending["action"]
        chosen = recommended if action is None else int(action)
        if not 1 <= chosen <= 4:
            raise ValueError(f"action must be in 1..4, got {chosen}")
        self.overrides.append(chosen != recommended)

        if cfg.redraw_theta_per_block and self.block > 0:
            # refresh the world's rates while keeping its latent state
            redraw_rng = derive(self.root, STREAM_WORLD, 3, self.block)
            params, _ = self.generator.sample_world(redraw_rng)
            self.env.params = params

        block_rewards = []
        ys_new = self.env.deploy(chosen, cfg.delta)
        for i in range(cfg.delta):
            self.streak = update_streak(self.streak, chosen)
            r = reward(int(self.y_current), chosen, self.streak.ell, cfg.reward)
            self.days_y.append(int(self.y_current))
            self.days_a.append(chosen)
            self.days_ell.append(self.streak.ell)
            self.days_r.append(r)
            block_rewards.append(r)
            self.y_current = int(ys_new[i])

        self.records.append(BlockRecord(
            block=self.block, t0=self.t0, action=chosen,
            artifact=self.pending["artifact"],
            beta_quantiles=self.pending["beta_quantiles"]))

        if self.naive_agent is not None:
            self.naive_agent.update(float(sum(block_rewards)), self.y_current)
        if self.cloud is not None:
            infer_rng = derive(self.root, STREAM_INFER, 1 + self.block)
            for y in ys_new:
                self.cloud = smc2_assimilate(self.cloud, int(y), chosen,
                                             self.vax, infer_rng)
        self.block += 1
        self._plan_next()

    def undo_snapshot(self) -> dict:
        """Snapshot used by the service to make step() atomic."""
        snap = {
            "block": self.block, "y_current": self.y_current,
            "streak": self.streak, "cloud": self.cloud, "qbar": self.qbar,
            "previous_opt": self.previous_opt, "pending": self.pending,
            "n_days": len(self.days_y), "n_records": len(self.records),
            "n_overrides": len(self.overrides),
            "env_counts": self.env._counts.copy(), "env_day": self.env.day,
            "env_params": self.env.params,
            "env_rng_state": self.env.rng.bit_generator.state,
        }
        if self.naive_agent is not None:
            snap["naive_table"] = self.naive_agent.table.copy()
            snap["naive_updates"] = self.naive_agent.n_updates
            snap["naive_pending"] = self.naive_agent._pending
        return snap

    def restore(self, snap: dict) -> None:
        self.block = snap["block"]
        self.y_current = snap["y_current"]
        self.streak = snap["streak"]
        self.cloud = snap["cloud"]
        self.qbar = snap["qbar"]
        self.previous_opt = snap["previous_opt"]
        self.pending = snap["pending"]
        del self.days_y[snap["n_days"]:]
        del self.days_a[snap["n_days"]:]
        del self.days_ell[snap["n_days"]:]
        del self.days_r[snap["n_days"]:]
        del self.records[snap["n_records"]:]
        del self.overrides[snap["n_overrides"]:]
        self.env._counts = snap["env_counts"].copy()
        self.env.day = snap["env_day"]
        self.env.params = snap["env_params"]
        self.env.rng.bit_generator.state = snap["env_rng_state"]
        if self.naive_agent is not None:
            self.naive_agent.table = snap["naive_table"].copy()
            self.naive_agent.n_updates = snap["naive_updates"]
            self.naive_agent._pending = snap["naive_pending"]

    def run_to_end(self) -> "DecisionTrace":
        while not self.finished:
            self.step()
        return self.trace()

    def trace(self) -> DecisionTrace:
        return DecisionTrace(
            planner=self.cfg.planner, seed=self.cfg.seed, replicate=self.replicate,
            y=np.asarray(self.days_y), actions=np.asarray(self.days_a),
            ell=np.asarray(self.days_ell), rewards=np.asarray(self.days_r),
            blocks=list(self.records), overrides=list(self.overrides),
            convergence_curves=dict(self.convergence_curves))


def warm_cloud_for(cfg: RunConfig, scenario: SyntheticScenario | None = None,
                   replicate: int = 0):
    """Warm-started cloud for a replicate, reusable across planners.

    The warm-up window does not depend on the planner or the reward
    weights, so paired comparisons can share this (it is bit-identical
    to what DecisionRunner would compute itself).
    """
    scenario = scenario or make_scenario(cfg, replicate)
    root = replicate_seed(cfg.seed, replicate)
    return warm_start(
        PriorSpec(), scenario.warmup_ys.tolist(),
        scenario.warmup_actions.tolist(), scenario.vax, cfg.base_params(),
        scenario.x0.as_array(),
        Smc2Config(n_theta=cfg.n_theta, n_x=cfg.n_x, n_moves=cfg.smc2_moves,
                   ess_fraction=cfg.smc2_ess_fraction),
        derive(root, STREAM_INFER))


def run_decision_loop(cfg: RunConfig, scenario: SyntheticScenario | None = None,
                      generator: GeneratorSpec | None = None,
                      replicate: int = 0, warm_cloud=None) -> DecisionTrace:
    """Batch execution of one replicate (always accepts the recommendation)."""
    return DecisionRunner(cfg, scenario, generator, replicate,
                          warm_cloud=warm_cloud).run_to_end()


def run_replicates(cfg: RunConfig, n_jobs: int = 1) -> list[DecisionTrace]:
    """Run cfg.replicates independent replicates, optionally in parallel."""
    if n_jobs == 1:
        return [run_decision_loop(cfg, replicate=r) for r in range(cfg.replicates)]
    from joblib import Parallel, delayed
    return Parallel(n_jobs=n_jobs, prefer="processes")(
        delayed(run_decision_loop)(cfg, replicate=r) for r in range(cfg.replicates))
