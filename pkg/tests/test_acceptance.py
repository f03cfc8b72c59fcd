"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run with -s or -v to see them all).
The desk-scale benchmark artifacts (worlds, warm clouds, planner runs)
are computed once in a module fixture and shared across criteria.
"""

import math
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from scipy import stats

from epicontrol.inference import PriorSpec, Smc2Config, sample_posterior, warm_start
from epicontrol.loop import desk_preset, make_scenario, run_decision_loop, warm_cloud_for
from epicontrol.model import CompartmentState, ModelParams, VaccinationStream, simulate
from epicontrol.model import kernels as K
from epicontrol.planners import (
    BinScheme,
    LearnSchedule,
    QTable,
    ThresholdGrid,
    find_convergence_episode,
    rollout_cost,
    select_block_action,
    train_posterior_averaged,
)
from epicontrol.rewards import RewardConfig, intervention_cost, reward
from epicontrol.rng import derive
from epicontrol.service import create_app
from toy_hmm import toy_forward_loglik, toy_observations, toy_pf_loglik
from toy_mdp import toy_train, toy_value_iteration

ACCEPT_SEED = 424242
KAPPAS = (0.2, 0.5, 0.8)
N_SEEDS = 10


def report(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {'PASS' if ok else 'FAIL'} - {name}: {detail}", flush=True)
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# shared desk-scale benchmark artifacts
# ---------------------------------------------------------------------------

def _desk_cfg(planner="threshold", kappa=0.2):
    cfg = desk_preset(seed=ACCEPT_SEED, planner=planner)
    return cfg.replace(reward=RewardConfig(
        kappa_icu=cfg.reward.kappa_icu, kappa_soec=kappa,
        t_crash=cfg.reward.t_crash, p_crash=cfg.reward.p_crash,
        gamma=cfg.reward.gamma))


@pytest.fixture(scope="module")
def benchmark_artifacts():
    """Worlds, warm clouds, and planner totals for the desk benchmark."""
    t0 = time.monotonic()
    scenarios, clouds = [], []
    for r in range(N_SEEDS):
        cfg0 = desk_preset(seed=ACCEPT_SEED)
        sc = make_scenario(cfg0, r)
        scenarios.append(sc)
        clouds.append(warm_cloud_for(cfg0, sc, r))
    totals: dict[tuple[float, str], list[float]] = {}
    for r in range(N_SEEDS):
        for kappa in KAPPAS:
            for planner in ("random", "naive_q", "threshold", "qlearn"):
                cfg = _desk_cfg(planner, kappa)
                wc = clouds[r] if planner in ("threshold", "qlearn") else None
                tr = run_decision_loop(cfg, scenario=scenarios[r],
                                       warm_cloud=wc, replicate=r)
                totals.setdefault((kappa, planner), []).append(tr.total_reward)
    elapsed = time.monotonic() - t0
    return {"scenarios": scenarios, "clouds": clouds, "totals": totals,
            "elapsed": elapsed}


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

class TestConservation:
    def test_a01_exact_conservation_for_1e6_transitions(self):
        t0 = time.monotonic()
        rng = derive(ACCEPT_SEED, 1)
        batch, n_batches = 1000, 1000  # 1e6 sampled one-day transitions
        violations = 0
        for b in range(n_batches):
            n_pop = int(rng.integers(10_000, 10_000_000))
            probs = rng.dirichlet(np.ones(14) * rng.uniform(0.2, 3.0))
            counts = rng.multinomial(n_pop, probs, size=batch).astype(np.int64)
            beta = np.sort(rng.uniform(0.01, 0.6, size=4))[::-1]
            params = ModelParams(population=n_pop, beta=tuple(beta))
            action = 1 + int(rng.integers(0, 4))
            df = int(rng.integers(0, n_pop // 2))
            ds = int(rng.integers(0, n_pop // 2))
            out = K.step_batch(counts, params.beta_for(action), params.p_ei,
                               params.p_ir, params.p_iu, params.p_ur,
                               params.p_vv, params.eps_array, params.psi_array,
                               n_pop, df, ds, False, rng)
            if not ((out.sum(axis=1) == n_pop).all() and (out >= 0).all()):
                violations += 1
        elapsed = time.monotonic() - t0
        report("conservation",
               violations == 0 and elapsed < 60.0,
               f"{n_batches * batch:,} transitions, {violations} violations, "
               f"{elapsed:.1f}s (< 60s)")


class TestRewardExactness:
    def test_a02_reward_and_cost_hand_values(self):
        cfg_ref = RewardConfig(kappa_icu=1.0, kappa_soec=0.2,
                               t_crash=6000, p_crash=1e5)
        checks = [
            ("crash branch at y=6001", reward(6001, 1, 0, cfg_ref), -1e5),
            ("crash regardless of action", reward(6001, 4, 50, cfg_ref), -1e5),
            ("worked example", reward(100, 3, 5, cfg_ref), -300.0),
            ("no measures are free", intervention_cost(1, 999), 0.0),
            ("log cost at streak 0", intervention_cost(2, 0), 0.0),
            ("full lockdown day 3", intervention_cost(4, 3), 2400.0),
            ("mild closure day 4", intervention_cost(2, 4), 50 * math.log(5)),
        ]
        worst = max(abs(got - want) for _, got, want in checks)
        report("reward exactness", worst <= 1e-12,
               f"max abs error {worst:.2e} over {len(checks)} identities (tol 1e-12)")


class TestObservationModel:
    def test_a03_negbin_mean_and_variance(self):
        n = 10**5
        k = 10.0
        ok = True
        details = []
        for h in (10, 1000):
            rng = derive(ACCEPT_SEED, 3, h)
            draws = np.array([K.negbin_draw(rng, k, float(h)) for _ in range(n)],
                             dtype=float)
            p = k / (k + h)
            var = h * (1 + h / k)
            mu4 = (stats.nbinom.moment(4, k, p)
                   - 4 * h * stats.nbinom.moment(3, k, p)
                   + 6 * h**2 * stats.nbinom.moment(2, k, p) - 3 * h**4)
            se_mean = math.sqrt(var / n)
            se_var = math.sqrt((float(mu4) - var**2) / n)
            mean_ok = abs(draws.mean() - h) < 3 * se_mean
            var_ok = abs(draws.var(ddof=1) - var) < 3 * se_var
            ok &= mean_ok and var_ok
            details.append(f"H={h}: mean {draws.mean():.2f} (target {h}, "
                           f"3SE {3 * se_mean:.2f}), var {draws.var(ddof=1):.0f} "
                           f"(target {var:.0f}, 3SE {3 * se_var:.0f})")
        report("observation model", ok, "; ".join(details))


class TestParticleFilter:
    def test_a04_pf_matches_forward_algorithm(self):
        ys = toy_observations(25, derive(ACCEPT_SEED, 4))
        exact = toy_forward_loglik(ys)
        runs = 200
        vals = np.array([toy_pf_loglik(ys, 256, derive(ACCEPT_SEED, 4, r + 1))
                         for r in range(runs)])
        se = vals.std(ddof=1) / math.sqrt(runs)
        mean_ok = abs(vals.mean() - exact) < 3 * se

        var64 = np.array([toy_pf_loglik(ys, 64, derive(ACCEPT_SEED, 5, r))
                          for r in range(runs)]).var(ddof=1)
        var512 = np.array([toy_pf_loglik(ys, 512, derive(ACCEPT_SEED, 6, r))
                           for r in range(runs)]).var(ddof=1)
        report("pf correctness",
               mean_ok and var512 <= var64,
               f"mean err {abs(vals.mean() - exact):.4f} < 3SE {3 * se:.4f} "
               f"(exact {exact:.2f}); var(512)={var512:.4f} <= var(64)={var64:.4f}")


class TestSmc2Recovery:
    def test_a05_synthetic_recovery_coverage(self):
        t0 = time.monotonic()
        beta_star = (0.40, 0.26, 0.17, 0.11)
        pop = 100_000
        timeline = [1] * 30 + [2] * 25 + [3] * 35 + [4] * 30  # 120 days
        covered = np.zeros(4, dtype=int)
        for s in range(10):
            params = ModelParams(beta=beta_star, population=pop)
            x0 = CompartmentState.seeded(pop, exposed=400, infectious=400)
            vax = VaccinationStream.zeros(130)
            _, obs = simulate(x0, params, timeline, vax, 120,
                              derive(ACCEPT_SEED, 7, s))
            cloud = warm_start(PriorSpec(), [o.y for o in obs], timeline, vax,
                               ModelParams(population=pop), x0.as_array(),
                               Smc2Config(n_theta=100, n_x=50, n_moves=2),
                               derive(ACCEPT_SEED, 8, s))
            q = cloud.beta_quantiles((0.05, 0.95))
            for j in range(4):
                covered[j] += int(q[0, j] <= beta_star[j] <= q[1, j])
        elapsed = time.monotonic() - t0
        report("smc2 recovery",
               (covered >= 8).all() and elapsed < 600.0,
               f"coverage per rate {covered.tolist()}/10 (need >= 8), "
               f"{elapsed:.0f}s (< 600s)")


class TestQLearningOracle:
    def test_a06_toy_policy_equals_value_iteration(self):
        _, policy_star = toy_value_iteration()
        q = toy_train()
        trained = {g: 1 + int(np.argmax(q.values[g - 1])) for g in (1, 2)}
        exact_match = trained == policy_star

        scheme = BinScheme(np.array([100.0]))
        qbar = QTable.zeros(2, 4)
        qbar.values[0] = [-3.0, -1.0, -2.0, -9.0]
        qbar.values[1] = [4.0, 2.0, 7.0, 1.0]
        scaled = QTable(2.5 * qbar.values, qbar.visits)
        invariant = all(
            select_block_action(qbar, y, scheme) ==
            select_block_action(scaled, y, scheme)
            for y in (0, 50, 99, 100, 10_000))
        report("q-learning oracle", exact_match and invariant,
               f"greedy policy {trained} == DP optimum {policy_star}; "
               f"selection invariant under positive scaling: {invariant}")


class TestConvergenceDiagnostics:
    def test_a07_max_delta_decay_with_policy_stability(self, benchmark_artifacts):
        clouds = benchmark_artifacts["clouds"]
        scenarios = benchmark_artifacts["scenarios"]
        cfg = _desk_cfg("qlearn", 0.2)
        scheme = BinScheme.geometric(cfg.bins.n_bins, cfg.bins.lo, cfg.bins.hi)
        schedule = LearnSchedule(episodes=2000, eps0=cfg.schedule.eps0,
                                 eps_min=cfg.schedule.eps_min,
                                 alpha_c=cfg.schedule.alpha_c)
        wins = 0
        first_passages = []
        min_rels = []
        for s in range(N_SEEDS):
            sc, cloud = scenarios[s], clouds[s]
            draws = sample_posterior(cloud, cfg.k_draws, derive(ACCEPT_SEED, 9, s))
            rngs = [derive(ACCEPT_SEED, 10, s, j) for j in range(cfg.k_draws)]
            _, rep = train_posterior_averaged(
                draws, sc.y_start, QTable.zeros(scheme.n_bins), schedule,
                scheme, cfg.reward, sc.vax, sc.start_day, cfg.horizon,
                cfg.delta, rngs, stop_early=False)
            episode, _ = find_convergence_episode(
                rep.max_delta, rep.policy_change, tol_rel=1e-4, patience=1,
                policy_tol=0.01, normalizer_window=2000)
            min_rels.append(float(rep.max_delta.min() / rep.max_delta[:2000].max()))
            if episode is not None and episode < 2000:
                wins += 1
                first_passages.append(episode)
        attainable = sorted(min_rels)[N_SEEDS - 9] if len(min_rels) >= 9 else None
        report("convergence diagnostics", wins >= 9,
               f"{wins}/10 seeds fell below 1e-4 of the early max with a "
               f"stable policy before E=2000 "
               f"(first passages: {sorted(first_passages)[:5]}; "
               f"per-seed smallest relative change: "
               f"{[f'{r:.1e}' for r in sorted(min_rels)]}; a 9/10-attainable "
               f"tolerance at this episode budget would be ~{attainable:.0e} "
               f"-- see the decisions ledger on the 1e-4 bar vs E=2000)")


class TestPlannerSuperiority:
    def test_a08_planners_beat_baselines(self, benchmark_artifacts):
        totals = benchmark_artifacts["totals"]
        elapsed = benchmark_artifacts["elapsed"]
        lines = []
        ok = True
        for kappa in KAPPAS:
            rnd = np.array(totals[(kappa, "random")])
            thr = np.array(totals[(kappa, "threshold")])
            ql = np.array(totals[(kappa, "qlearn")])
            thr_wins = int((thr > rnd).sum())
            ql_wins = int((ql > rnd).sum())
            ok &= thr_wins >= 9 and ql_wins >= 9
            lines.append(f"k={kappa}: threshold>random {thr_wins}/10, "
                         f"qlearn>random {ql_wins}/10")
        naive = np.array(totals[(0.2, "naive_q")])
        ql02 = np.array(totals[(0.2, "qlearn")])
        naive_losses = int((naive < ql02).sum())
        ok &= naive_losses >= 8
        lines.append(f"naive_q<qlearn {naive_losses}/10 (k=0.2)")
        ok &= elapsed < 1800.0
        lines.append(f"benchmark wall time {elapsed:.0f}s (< 1800s)")
        report("planner superiority", ok, "; ".join(lines))


class TestGridSearchEquivalence:
    def test_a09_plan_block_equals_exhaustive_enumeration(self, benchmark_artifacts):
        from epicontrol.planners import plan_block, select_best
        sc = benchmark_artifacts["scenarios"][0]
        cloud = benchmark_artifacts["clouds"][0]
        cfg = _desk_cfg("threshold", 0.2)
        grid = ThresholdGrid.geometric(n_points=5, lo=10, hi=2000)
        candidates = grid.all_triples()
        assert len(candidates) == 10

        got = plan_block(cloud, grid, 3, 20, cfg.reward, sc.vax,
                         derive(ACCEPT_SEED, 11), y0=sc.y_start)

        rng = derive(ACCEPT_SEED, 11)
        pairs = sample_posterior(cloud, 3, rng)
        seeds = [int(s) for s in rng.integers(0, 2**62, size=3)]
        scores = np.empty(len(candidates))
        for ci, phi in enumerate(candidates):
            tot = 0.0
            for j, (theta, state) in enumerate(pairs):
                tot += rollout_cost(theta, state, phi, 20, cfg.reward, sc.vax,
                                    np.random.default_rng(seeds[j]),
                                    y0=sc.y_start, t0=cloud.t)
            scores[ci] = tot / 3
        brute = select_best(candidates, scores)
        report("grid-search equivalence", got == brute,
               f"plan_block chose {got.as_tuple()}, enumeration chose "
               f"{brute.as_tuple()} over {len(candidates)} candidates")


class TestBatchInteractiveEquivalence:
    def test_a10_accept_all_session_equals_batch(self):
        overrides = dict(t_horizon=40, warmup_days=20, horizon=20, k_draws=3,
                         episodes=80, n_theta=20, n_x=12, replicates=1,
                         seed=ACCEPT_SEED, planner="threshold")
        cfg = desk_preset(**overrides)
        batch = run_decision_loop(cfg)

        app = create_app()
        with TestClient(app) as client:
            view = client.post("/sessions",
                               json=dict(overrides, preset="desk")).json()
            sid = view["id"]
            while view["status"] != "finished":
                view = client.post(f"/sessions/{sid}/step",
                                   json={"action": "recommended"}).json()
        same = (view["trace"]["y"] == batch.y.tolist()
                and view["trace"]["action"] == batch.actions.tolist()
                and view["trace"]["reward"] == [float(r) for r in batch.rewards])
        report("batch-interactive equivalence", same,
               f"{len(batch.y)} daily (y, a, r) records identical: {same}")
