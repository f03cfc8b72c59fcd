import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from epicontrol.loop import desk_preset, run_decision_loop
from epicontrol.service import create_app

TINY = {"preset": "desk", "t_horizon": 30, "warmup_days": 20, "horizon": 20,
        "k_draws": 3, "episodes": 60, "n_theta": 16, "n_x": 12,
        "replicates": 1, "seed": 11, "planner": "threshold"}


@pytest.fixture()
def client(tmp_path):
    app = create_app(session_dir=tmp_path / "sessions")
    with TestClient(app) as c:
        yield c


def make_session(client, **overrides):
    body = dict(TINY)
    body.update(overrides)
    resp = client.post("/sessions", json=body)
    assert resp.status_code == 201, resp.text
    return resp.json()


class TestLifecycle:
    def test_healthz(self, client):
        assert client.get("/healthz").json() == {"status": "ok"}

    def test_create_session_awaiting_with_recommendation(self, client):
        view = make_session(client)
        assert view["status"] == "awaiting_decision"
        assert view["trace"]["y"] == []
        assert view["recommendation"] is not None
        assert 1 <= view["recommendation"]["action"] <= 4
        assert view["block"] == 0

    def test_invalid_delta_rejected(self, client):
        resp = client.post("/sessions", json=dict(TINY, t_horizon=35))
        assert resp.status_code == 422
        assert resp.json()["code"] == "invalid-config"

    def test_unknown_session_not_found(self, client):
        resp = client.get("/sessions/nope")
        assert resp.status_code == 404
        assert resp.json()["code"] == "not-found"

    def test_same_config_same_first_recommendation(self, client):
        a = make_session(client)
        b = make_session(client)
        assert a["recommendation"] == b["recommendation"]

    def test_missing_preset_defaults_to_desk(self, client):
        body = {k: v for k, v in TINY.items() if k != "preset"}
        resp = client.post("/sessions", json=body)
        assert resp.status_code == 201, resp.text
        assert resp.json()["config"]["population"] == 100_000  # desk base

    def test_step_advances_delta_days(self, client):
        view = make_session(client)
        out = client.post(f"/sessions/{view['id']}/step",
                          json={"action": "recommended"}).json()
        assert len(out["trace"]["y"]) == 10  # one delta-day block
        assert out["block"] == 1
        assert out["overrides"] == [False]

    def test_beta_quantiles_ordered(self, client):
        view = make_session(client)
        q = np.asarray(view["beta_quantiles"])
        assert q.shape == (3, 4)
        assert (q[0] <= q[1]).all() and (q[1] <= q[2]).all()

    def test_override_recorded(self, client):
        view = make_session(client)
        rec = view["recommendation"]["action"]
        override = 4 if rec != 4 else 3
        out = client.post(f"/sessions/{view['id']}/step",
                          json={"action": override}).json()
        assert out["overrides"] == [True]
        assert set(out["trace"]["action"]) == {override}

    def test_override_with_recommended_action_counts_as_accept(self, client):
        view = make_session(client)
        rec = view["recommendation"]["action"]
        out = client.post(f"/sessions/{view['id']}/step", json={"action": rec}).json()
        assert out["overrides"] == [False]

    def test_step_after_finish_is_wrong_status(self, client):
        view = make_session(client)
        sid = view["id"]
        for _ in range(3):
            out = client.post(f"/sessions/{sid}/step",
                              json={"action": "recommended"}).json()
        assert out["status"] == "finished"
        resp = client.post(f"/sessions/{sid}/step", json={"action": "recommended"})
        assert resp.status_code == 409
        assert resp.json()["code"] == "wrong-status"

    def test_bad_action_rejected(self, client):
        view = make_session(client)
        resp = client.post(f"/sessions/{view['id']}/step", json={"action": 9})
        assert resp.status_code == 422
        assert resp.json()["code"] == "bad-action"

    def test_checkpoint_files_written(self, client, tmp_path):
        view = make_session(client)
        client.post(f"/sessions/{view['id']}/step", json={"action": "recommended"})
        sdir = tmp_path / "sessions" / view["id"]
        assert (sdir / "session.json").exists()
        assert (sdir / "trace.csv").exists()
        doc = json.loads((sdir / "session.json").read_text())
        assert len(doc["chosen_actions"]) == 1


class TestBatchEquivalence:
    def test_accept_all_session_reproduces_batch_trace(self, client):
        cfg = desk_preset(**{k: v for k, v in TINY.items() if k != "preset"})
        batch = run_decision_loop(cfg)

        view = make_session(client)
        sid = view["id"]
        while view["status"] != "finished":
            view = client.post(f"/sessions/{sid}/step",
                               json={"action": "recommended"}).json()
        assert view["trace"]["y"] == batch.y.tolist()
        assert view["trace"]["action"] == batch.actions.tolist()
        assert view["trace"]["ell"] == batch.ell.tolist()
        assert view["trace"]["reward"] == [float(r) for r in batch.rewards]


class TestWhatIf:
    def test_quantiles_ordered_and_pure(self, client):
        view = make_session(client)
        sid = view["id"]
        before = client.get(f"/sessions/{sid}").json()
        w1 = client.get(f"/sessions/{sid}/whatif").json()
        w2 = client.get(f"/sessions/{sid}/whatif").json()
        after = client.get(f"/sessions/{sid}").json()
        assert w1 == w2                      # deterministic, repeatable
        assert before == after               # pure read
        assert set(w1["per_action"]) == {"1", "2", "3", "4"}
        for fan in w1["per_action"].values():
            lo = np.asarray(fan["icu_q05"])
            mid = np.asarray(fan["icu_q50"])
            hi = np.asarray(fan["icu_q95"])
            assert (lo <= mid).all() and (mid <= hi).all()

    def test_zero_epidemic_costs_order_the_actions(self, client):
        body = dict(TINY, initial_exposed=0, initial_infectious=0, seed=5)
        view = make_session(client, **body)
        w = client.get(f"/sessions/{view['id']}/whatif").json()
        returns = [w["per_action"][str(a)]["expected_return"] for a in (1, 2, 3, 4)]
        icu_all = [max(w["per_action"][str(a)]["icu_q95"]) for a in (1, 2, 3, 4)]
        assert all(v == 0 for v in icu_all)
        assert returns[0] == max(returns)
        assert returns[0] == 0.0

    def test_whatif_after_finish_is_wrong_status(self, client):
        view = make_session(client)
        sid = view["id"]
        for _ in range(3):
            client.post(f"/sessions/{sid}/step", json={"action": "recommended"})
        resp = client.get(f"/sessions/{sid}/whatif")
        assert resp.status_code == 409

    def test_whatif_without_posterior_planner(self, client):
        view = make_session(client, planner="random")
        resp = client.get(f"/sessions/{view['id']}/whatif")
        assert resp.status_code == 409
        assert resp.json()["code"] == "no-posterior"


class TestQTableEndpoint:
    def test_qlearn_session_serves_table(self, client):
        view = make_session(client, planner="qlearn")
        resp = client.get(f"/sessions/{view['id']}/qtable")
        assert resp.status_code == 200
        doc = resp.json()
        assert len(doc["values"]) == len(doc["bins"]) + 1
        assert doc["diagnostics"]["max_delta"]

    def test_threshold_session_has_no_table(self, client):
        view = make_session(client)
        resp = client.get(f"/sessions/{view['id']}/qtable")
        assert resp.status_code == 404
        assert resp.json()["code"] == "no-qtable"


class TestAtomicity:
    def test_failed_step_leaves_state_intact(self, client, tmp_path):
        # horizon exceeds the vaccination stream during the last block's
        # planning; engineered by a scenario whose stream barely covers
        # deployment. Simpler: force failure by stepping a corrupted runner.
        app = create_app(session_dir=tmp_path / "s2")
        with TestClient(app) as c2:
            view = make_session(c2)
            store = app.state.store
            session = store.get(view["id"])
            before = session.view()
            # sabotage the environment so deploy raises mid-block
            session.runner.env.vax = session.runner.env.vax.__class__(
                session.runner.env.vax.daily_first[:session.runner.env.day + 3],
                session.runner.env.vax.daily_second[:session.runner.env.day + 3])
            resp = c2.post(f"/sessions/{view['id']}/step",
                           json={"action": "recommended"})
            assert resp.status_code == 500
            assert resp.json()["code"] == "step-failed"
            session.runner.env.vax = session.runner.vax
            after = session.view()
            assert before == after
            # and the session still works afterwards
            ok = c2.post(f"/sessions/{view['id']}/step",
                         json={"action": "recommended"})
            assert ok.status_code == 200


class TestResume:
    def test_replayed_session_matches_checkpoint(self, client, tmp_path):
        view = make_session(client)
        sid = view["id"]
        client.post(f"/sessions/{sid}/step", json={"action": 3})
        latest = client.post(f"/sessions/{sid}/step",
                             json={"action": "recommended"}).json()
        app2 = create_app(session_dir=tmp_path / "sessions")
        store2 = app2.state.store
        resumed = store2.resume(sid)
        assert resumed.view()["trace"] == latest["trace"]
        assert resumed.view()["overrides"] == latest["overrides"]
