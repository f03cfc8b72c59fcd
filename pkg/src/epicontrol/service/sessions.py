"""Interactive sessions around the decision runner.

A session owns one DecisionRunner plus bookkeeping for the pending
recommendation, override history, and per-step disk checkpoints.
Operations on a session are serialised by its lock; what-if forecasts
derive their own read-only streams so they never perturb the run.
"""

from __future__ import annotations

import dataclasses
import json
import threading
import uuid
from pathlib import Path

import numpy as np

from ..loop.config import RunConfig
from ..loop.decision import DecisionRunner
from ..inference import sample_posterior
from ..planners import qtable_to_csv, rollout_fixed_action
from ..rng import STREAM_WHATIF, derive

AWAITING = "awaiting_decision"
ADVANCING = "advancing"
FINISHED = "finished"


class SessionError(Exception):
    def __init__(self, code: str, message: str, status: int):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


class Session:
    def __init__(self, cfg: RunConfig, session_dir: Path | None = None,
                 replicate: int = 0, session_id: str | None = None):
        self.id = session_id or uuid.uuid4().hex[:12]
        self.cfg = cfg
        self.runner = DecisionRunner(cfg, replicate=replicate)
        # reentrant: step() renders its own view while holding the lock
        self.lock = threading.RLock()
        self.status = FINISHED if self.runner.finished else AWAITING
        self.session_dir = Path(session_dir) / self.id if session_dir else None
        if self.session_dir:
            self.session_dir.mkdir(parents=True, exist_ok=True)
            self._checkpoint()

    # -- views ---------------------------------------------------------------

    def view_locked(self) -> dict:
        """Serialised read: never interleaves with a step in flight."""
        with self.lock:
            return self.view()

    def view(self) -> dict:
        r = self.runner
        rec = None
        if r.pending is not None:
            rec = {"action": r.pending["action"],
                   "artifact": r.pending["artifact"]}
        beta_q = r.pending["beta_quantiles"] if r.pending else (
            r.cloud.beta_quantiles().tolist() if r.cloud is not None else None)
        return {
            "id": self.id,
            "status": self.status,
            "planner": self.cfg.planner,
            "block": r.block,
            "n_blocks": self.cfg.n_blocks,
            "delta": self.cfg.delta,
            "day": r.start_day + len(r.days_y),
            "y_current": int(r.y_current),
            "recommendation": rec,
            "beta_quantiles": beta_q,
            "trace": {
                "day": list(range(r.start_day, r.start_day + len(r.days_y))),
                "y": list(map(int, r.days_y)),
                "action": list(map(int, r.days_a)),
                "ell": list(map(int, r.days_ell)),
                "reward": list(map(float, r.days_r)),
            },
            "total_reward": float(sum(r.days_r)),
            "overrides": list(r.overrides),
            "config": {
                "t_horizon": self.cfg.t_horizon,
                "delta": self.cfg.delta,
                "seed": self.cfg.seed,
                "planner": self.cfg.planner,
                "kappa_soec": self.cfg.reward.kappa_soec,
                "population": self.cfg.population,
            },
        }

    # -- transitions -----------------------------------------------------------

    def step(self, action: int | None) -> dict:
        with self.lock:
            if self.status == FINISHED:
                raise SessionError("wrong-status", "session already finished", 409)
            if self.status == ADVANCING:
                raise SessionError("wrong-status", "a step is already in flight", 409)
            snap = self.runner.undo_snapshot()
            self.status = ADVANCING
            try:
                self.runner.step(action)
            except Exception as exc:
                self.runner.restore(snap)
                self.status = FINISHED if self.runner.finished else AWAITING
                raise SessionError("step-failed", f"step aborted: {exc}", 500) from exc
            self.status = FINISHED if self.runner.finished else AWAITING
            if self.session_dir:
                self._checkpoint()
            return self.view()

    # -- what-if ---------------------------------------------------------------

    def whatif(self, k: int | None = None) -> dict:
        with self.lock:
            return self._whatif(k)

    def _whatif(self, k: int | None = None) -> dict:
        if self.status == FINISHED:
            raise SessionError("wrong-status", "session already finished", 409)
        r = self.runner
        if r.cloud is None:
            raise SessionError(
                "no-posterior",
                f"planner {self.cfg.planner!r} keeps no posterior belief", 409)
        k = k or self.cfg.k_draws
        horizon = self.cfg.horizon
        draw_rng = derive(r.root, STREAM_WHATIF, r.block, 0)
        pairs = sample_posterior(r.cloud, k, draw_rng)
        per_action = {}
        for action in (1, 2, 3, 4):
            icu = np.empty((k, horizon))
            rets = np.empty(k)
            for j, (theta, state) in enumerate(pairs):
                rng = derive(r.root, STREAM_WHATIF, r.block, action, j + 1)
                rets[j], icu[j] = rollout_fixed_action(
                    theta, state, action, horizon, self.cfg.reward, r.vax,
                    rng, y0=r.y_current, streak=r.streak, t0=r.t0)
            per_action[str(action)] = {
                "icu_q05": np.percentile(icu, 5, axis=0).tolist(),
                "icu_q50": np.percentile(icu, 50, axis=0).tolist(),
                "icu_q95": np.percentile(icu, 95, axis=0).tolist(),
                "expected_return": float(rets.mean()),
            }
        return {"horizon": horizon, "k": k, "block": r.block,
                "per_action": per_action}

    def qtable(self) -> dict:
        with self.lock:
            return self._qtable()

    def _qtable(self) -> dict:
        r = self.runner
        if r.qbar is None:
            raise SessionError("no-qtable",
                               "no averaged table (planner is not qlearn "
                               "or no block planned yet)", 404)
        report = r.last_report
        return {
            "bins": r.bins.thresholds.tolist(),
            "values": r.qbar.values.tolist(),
            "visits": r.qbar.visits.tolist(),
            "diagnostics": None if report is None else {
                "max_delta": report.max_delta.tolist(),
                "policy_change_fraction": report.policy_change.tolist(),
                "converged_at": report.converged_at,
            },
        }

    # -- persistence -------------------------------------------------------------

    def _checkpoint(self) -> None:
        doc = {
            "id": self.id,
            "status": self.status,
            "config": dataclasses.asdict(self.cfg),
            "chosen_actions": [int(b.action) for b in self.runner.records],
            "overrides": list(self.runner.overrides),
        }
        (self.session_dir / "session.json").write_text(json.dumps(doc, indent=2))
        self.runner.trace().to_csv(self.session_dir / "trace.csv")
        if self.runner.qbar is not None:
            qtable_to_csv(self.runner.qbar, self.session_dir / "qtable.csv")


class SessionStore:
    def __init__(self, session_dir: Path | None = None):
        self.session_dir = session_dir
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, cfg: RunConfig) -> Session:
        session = Session(cfg, self.session_dir)
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionError("not-found", f"no session {session_id!r}", 404)
        return session

    def resume(self, session_id: str) -> Session:
        """Rebuild a checkpointed session by replaying its chosen actions.

        Streams are keyed, so the replayed runner is bit-identical to the
        one that wrote the checkpoint.
        """
        if not self.session_dir:
            raise SessionError("no-persistence", "server runs without a session dir", 409)
        path = Path(self.session_dir) / session_id / "session.json"
        if not path.exists():
            raise SessionError("not-found", f"no checkpoint for {session_id!r}", 404)
        doc = json.loads(path.read_text())
        cfg_doc = doc["config"]
        nested = {k: cfg_doc.pop(k) for k in
                  ("model", "reward", "grid", "bins", "schedule", "convergence")}
        cfg = RunConfig(**cfg_doc).replace(
            **{k: type(getattr(RunConfig(), k))(**v) for k, v in nested.items()})
        session = Session(cfg, None, session_id=doc["id"])
        for action, overrode in zip(doc["chosen_actions"], doc["overrides"]):
            session.step(int(action) if overrode else None)
        session.session_dir = Path(self.session_dir) / session_id
        with self._lock:
            self._sessions[session.id] = session
        return session
