"""HTTP session service: revisions, staleness, error codes, concurrency."""

import threading

import numpy as np
import pytest
from fastapi.testclient import TestClient

from entropool.service import create_app


@pytest.fixture
def client():
    return TestClient(create_app())


@pytest.fixture
def session(client):
    rng = np.random.default_rng(42)
    j = 300
    body = {
        "factor_names": ["XM", "XG2m", "X2y", "X10y"],
        "data": np.column_stack([
            rng.standard_normal(j) * 0.02,
            rng.standard_normal(j) * 0.006,
            rng.standard_normal(j) * 0.0005,
            rng.standard_normal(j) * 0.0005,
        ]).tolist(),
    }
    response = client.post("/sessions", json=body)
    assert response.status_code == 200
    return response.json()


MEAN_VIEW = {
    "kind": "MeanLocation", "columns": ["X10y - X2y"], "direction": "=",
    "target": {"mode": "Absolute", "value": 0.0005},
}


class TestSessionLifecycle:
    def test_health(self, client):
        assert client.get("/health").json()["status"] == "ok"

    def test_create_rejects_bad_panel(self, client):
        response = client.post("/sessions", json={
            "factor_names": ["a"], "data": [[1.0]]})
        assert response.status_code == 400

    def test_create_rejects_malformed_payload(self, client):
        response = client.post("/sessions", json={"nope": 1})
        assert response.status_code == 400  # not FastAPI's default 422

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/zzz/statistics").status_code == 404

    def test_describe(self, client, session):
        info = client.get(f"/sessions/{session['session_id']}").json()
        assert info["revision"] == 0
        assert info["n_scenarios"] == 300
        assert info["solved"] is False


class TestSolveFlow:
    def test_no_views_posterior_equals_prior(self, client, session):
        sid = session["session_id"]
        solve = client.post(f"/sessions/{sid}/solve", json={"revision": 0})
        assert solve.status_code == 200
        stats = client.get(f"/sessions/{sid}/statistics").json()
        assert stats["solved"] is True
        for column in stats["columns"]:
            assert column["posterior"]["mean"] == column["prior"]["mean"]
            assert column["posterior"]["std"] == column["prior"]["std"]

    def test_put_view_increments_revision_and_invalidates(self, client, session):
        sid = session["session_id"]
        client.post(f"/sessions/{sid}/solve", json={"revision": 0})
        put = client.put(f"/sessions/{sid}/views/macro", json={
            "revision": 1, "overall_confidence": 1.0, "views": [MEAN_VIEW]})
        assert put.status_code == 200
        assert put.json()["revision"] == 2
        stats = client.get(f"/sessions/{sid}/statistics").json()
        assert stats["solved"] is False  # cache invalidated by the mutation

    def test_solved_stats_reflect_view(self, client, session):
        sid = session["session_id"]
        client.put(f"/sessions/{sid}/views/macro", json={
            "revision": 0, "overall_confidence": 1.0, "views": [MEAN_VIEW]})
        solve = client.post(f"/sessions/{sid}/solve", json={"revision": 1})
        assert solve.status_code == 200
        assert solve.json()["users"]["macro"]["converged"] is True
        stats = client.get(f"/sessions/{sid}/statistics").json()
        by_name = {c["name"]: c for c in stats["columns"]}
        moved = (by_name["X10y"]["posterior"]["mean"]
                 - by_name["X2y"]["posterior"]["mean"])
        assert moved == pytest.approx(0.0005, abs=1e-8)

    def test_stale_revision_409(self, client, session):
        sid = session["session_id"]
        client.put(f"/sessions/{sid}/views/u", json={
            "revision": 0, "overall_confidence": 1.0, "views": [MEAN_VIEW]})
        stale = client.put(f"/sessions/{sid}/views/u", json={
            "revision": 0, "overall_confidence": 1.0, "views": []})
        assert stale.status_code == 409

    def test_infeasible_views_422(self, client, session):
        sid = session["session_id"]
        views = [
            {"kind": "MeanLocation", "columns": ["XM"], "direction": "=",
             "target": {"mode": "Absolute", "value": 0.0}},
            {"kind": "MeanLocation", "columns": ["XM"], "direction": "=",
             "target": {"mode": "Absolute", "value": 0.05}},
        ]
        client.put(f"/sessions/{sid}/views/u", json={
            "revision": 0, "overall_confidence": 1.0, "views": views})
        solve = client.post(f"/sessions/{sid}/solve", json={"revision": 1})
        assert solve.status_code == 422

    def test_bad_view_schema_400(self, client, session):
        sid = session["session_id"]
        response = client.put(f"/sessions/{sid}/views/u", json={
            "revision": 0, "overall_confidence": 1.0,
            "views": [{"kind": "MeanLocation", "columns": ["XM"],
                       "surprise": True}]})
        assert response.status_code == 400

    def test_get_never_mutates(self, client, session):
        sid = session["session_id"]
        for _ in range(3):
            client.get(f"/sessions/{sid}/statistics")
            client.get(f"/sessions/{sid}")
            client.get(f"/sessions/{sid}/histogram",
                       params={"column": "XM", "bins": 20})
        assert client.get(f"/sessions/{sid}").json()["revision"] == 0


class TestHistogram:
    def test_masses_sum_to_one(self, client, session):
        sid = session["session_id"]
        response = client.get(f"/sessions/{sid}/histogram",
                              params={"column": "XM", "bins": 40})
        payload = response.json()
        assert len(payload["edges"]) == 41
        assert sum(payload["prior_mass"]) == pytest.approx(1.0, abs=1e-9)
        assert sum(payload["posterior_mass"]) == pytest.approx(1.0, abs=1e-9)

    def test_unknown_column_400(self, client, session):
        sid = session["session_id"]
        response = client.get(f"/sessions/{sid}/histogram",
                              params={"column": "nope"})
        assert response.status_code == 400

    def test_posterior_shift_visible(self, client, session):
        sid = session["session_id"]
        bullish = {"kind": "MeanLocation", "columns": ["XM"], "direction": "=",
                   "target": {"mode": "KappaSigma", "value": 1.0}}
        client.put(f"/sessions/{sid}/views/u", json={
            "revision": 0, "overall_confidence": 1.0, "views": [bullish]})
        client.post(f"/sessions/{sid}/solve", json={"revision": 1})
        payload = client.get(f"/sessions/{sid}/histogram",
                             params={"column": "XM", "bins": 30}).json()
        edges = np.asarray(payload["edges"])
        mids = 0.5 * (edges[1:] + edges[:-1])
        prior_mean = float(mids @ payload["prior_mass"])
        post_mean = float(mids @ payload["posterior_mass"])
        assert post_mean > prior_mean


class TestFrontierEndpoints:
    def _small_book(self):
        return [{
            "underlying_id": "M1m", "strike": 30.0, "expiry": 1.0 / 12.0,
            "risk_free": 0.02, "smile_alpha": -0.08, "smile_beta": 0.4,
            "current_underlying": 30.0, "current_atm_vol": 0.35,
            "horizon": 1.0 / 252.0, "underlying_factor": "XM",
            "vol_factor": "XG2m",
        }, {
            "underlying_id": "M2m", "strike": 30.0, "expiry": 2.0 / 12.0,
            "risk_free": 0.02, "smile_alpha": -0.08, "smile_beta": 0.4,
            "current_underlying": 30.0, "current_atm_vol": 0.35,
            "horizon": 1.0 / 252.0, "underlying_factor": "XM",
            "vol_factor": "XG2m",
        }]

    def test_compute_and_get(self, client, session):
        sid = session["session_id"]
        response = client.post(f"/sessions/{sid}/frontier", json={
            "revision": 0, "book": self._small_book(),
            "lambdas": [0.0, 1000.0], "position_cap": 10.0})
        assert response.status_code == 200
        frontier = client.get(f"/sessions/{sid}/frontier").json()
        assert frontier["computed"] is True
        assert len(frontier["points"]) == 2
        extreme = frontier["points"][-1]
        np.testing.assert_allclose(extreme["weights"], 0.0, atol=1e-8)

    def test_frontier_before_compute(self, client, session):
        sid = session["session_id"]
        payload = client.get(f"/sessions/{sid}/frontier").json()
        assert payload["computed"] is False
        assert payload["points"] == []

    def test_frontier_stale_revision(self, client, session):
        sid = session["session_id"]
        response = client.post(f"/sessions/{sid}/frontier", json={
            "revision": 5, "book": self._small_book()})
        assert response.status_code == 409


class TestConcurrency:
    def test_serialized_puts_keep_revision_continuous(self, client, session):
        sid = session["session_id"]
        n_workers, successes, lock = 8, [], threading.Lock()

        def worker(worker_id):
            for _ in range(50):  # retry with refreshed revision on 409
                seen = client.get(f"/sessions/{sid}").json()["revision"]
                response = client.put(f"/sessions/{sid}/views/w{worker_id}",
                                      json={"revision": seen,
                                            "overall_confidence": 0.1,
                                            "views": [MEAN_VIEW]})
                if response.status_code == 200:
                    with lock:
                        successes.append(response.json()["revision"])
                    return
            raise AssertionError("worker starved")

        threads = [threading.Thread(target=worker, args=(i,))
                   for i in range(n_workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        # one total order: every success got a distinct revision, and the
        # final revision counts exactly the successful mutations
        assert len(successes) == n_workers
        assert sorted(successes) == list(range(1, n_workers + 1))
        info = client.get(f"/sessions/{sid}").json()
        assert info["revision"] == n_workers
        assert len(info["users"]) == n_workers


class TestSnapshot:
    def test_snapshot_contains_state(self, client, session):
        sid = session["session_id"]
        client.put(f"/sessions/{sid}/views/u", json={
            "revision": 0, "overall_confidence": 0.5, "views": [MEAN_VIEW]})
        client.post(f"/sessions/{sid}/solve", json={"revision": 1})
        snap = client.get(f"/sessions/{sid}/snapshot").json()
        assert snap["revision"] == 2
        assert snap["users"]["u"]["overall_confidence"] == 0.5
        assert len(snap["pooled"]) == 300
