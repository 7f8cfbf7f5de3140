"""CLI contract: file round-trips, exit codes, the three-analyst pipeline."""

import json

import numpy as np
import pytest

from entropool.cli import main
from entropool.scenarios import (ProbabilityVector, ScenarioPanel,
                                 load_probabilities, save_panel_csv,
                                 save_probabilities)


@pytest.fixture
def small_market(tmp_path):
    rng = np.random.default_rng(123)
    j = 400
    data = np.column_stack([
        rng.standard_normal(j) * 0.02,
        rng.standard_normal(j) * 0.006,
        rng.standard_normal(j) * 0.0005,
        rng.standard_normal(j) * 0.0005,
    ])
    panel = ScenarioPanel(["XM", "XM2m", "X2y", "X10y"], data)
    panel_path = tmp_path / "panel.csv"
    save_panel_csv(panel, panel_path)
    prior_path = tmp_path / "prior.txt"
    save_probabilities(ProbabilityVector.uniform(j), prior_path)
    return tmp_path, panel_path, prior_path, j


def write_views(path, payload):
    path.write_text(json.dumps(payload))
    return path


class TestSolveCommand:
    def test_empty_views_round_trips_prior_bytes(self, small_market):
        tmp, panel_path, prior_path, j = small_market
        views_path = write_views(tmp / "views.json", [])
        out = tmp / "posterior.txt"
        code = main(["solve", "--panel", str(panel_path), "--views",
                     str(views_path), "--prior", str(prior_path),
                     "--out", str(out)])
        assert code == 0
        assert out.read_bytes() == prior_path.read_bytes()
        diag = json.loads((tmp / "posterior.txt.diag.json").read_text())
        assert diag["converged"] is True
        assert diag["pooled"]["relative_entropy"] == 0.0

    def test_single_view_solves(self, small_market):
        tmp, panel_path, prior_path, j = small_market
        views_path = write_views(tmp / "views.json", [{
            "kind": "MeanLocation", "columns": ["X10y - X2y"],
            "direction": "=", "target": {"mode": "Absolute", "value": 0.0005},
        }])
        out = tmp / "posterior.txt"
        code = main(["solve", "--panel", str(panel_path), "--views",
                     str(views_path), "--out", str(out)])
        assert code == 0
        posterior = load_probabilities(out, j)
        assert np.all(posterior.weights > 0)

    def test_three_analysts_pooled(self, small_market):
        tmp, panel_path, prior_path, j = small_market
        views_path = write_views(tmp / "views.json", {"users": [
            {"user_id": "spread", "overall_confidence": 0.20, "views": [{
                "kind": "MeanLocation", "columns": ["XM2m"],
                "direction": "<=",
                "target": {"mode": "KappaSigma", "value": -1.0}}]},
            {"user_id": "vol", "overall_confidence": 0.25, "views": [{
                "kind": "MedianLocation", "columns": ["abs(XM)"],
                "direction": ">=",
                "target": {"mode": "QuantileShift", "value": 0.5}}]},
            {"user_id": "macro", "overall_confidence": 0.20, "views": [{
                "kind": "MeanLocation", "columns": ["X10y - X2y"],
                "direction": "=",
                "target": {"mode": "Absolute", "value": 0.0005}}]},
        ]})
        out = tmp / "pooled.txt"
        code = main(["solve", "--panel", str(panel_path), "--views",
                     str(views_path), "--prior", str(prior_path),
                     "--out", str(out)])
        assert code == 0
        diag = json.loads((tmp / "pooled.txt.diag.json").read_text())
        assert set(diag["users"]) == {"spread", "vol", "macro"}
        assert all(d["converged"] for d in diag["users"].values())
        pooled = load_probabilities(out, j)
        assert np.all(pooled.weights > 0)

    def test_confidence_flag_pools_toward_prior(self, small_market):
        tmp, panel_path, prior_path, j = small_market
        views_path = write_views(tmp / "views.json", [{
            "kind": "MeanLocation", "columns": ["XM"], "direction": "=",
            "target": {"mode": "KappaSigma", "value": 1.0}}])
        full = tmp / "full.txt"
        half = tmp / "half.txt"
        assert main(["solve", "--panel", str(panel_path), "--views",
                     str(views_path), "--prior", str(prior_path),
                     "--out", str(full)]) == 0
        assert main(["solve", "--panel", str(panel_path), "--views",
                     str(views_path), "--prior", str(prior_path),
                     "--out", str(half), "--confidence", "0.5"]) == 0
        p_full = load_probabilities(full, j).weights
        p_half = load_probabilities(half, j).weights
        uniform = np.full(j, 1.0 / j)
        np.testing.assert_allclose(p_half, 0.5 * uniform + 0.5 * p_full,
                                   atol=1e-12)

    def test_parse_error_exit_2(self, small_market, tmp_path):
        tmp, panel_path, prior_path, _ = small_market
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["solve", "--panel", str(panel_path), "--views", str(bad),
                     "--out", str(tmp_path / "o.txt")]) == 2

    def test_unknown_factor_exit_2(self, small_market):
        tmp, panel_path, prior_path, _ = small_market
        views_path = write_views(tmp / "views.json", [{
            "kind": "MeanLocation", "columns": ["missing_factor"],
            "direction": "=", "target": {"mode": "Absolute", "value": 0.0}}])
        assert main(["solve", "--panel", str(panel_path), "--views",
                     str(views_path), "--out", str(tmp / "o.txt")]) == 2

    def test_contradictory_views_exit_3(self, small_market):
        tmp, panel_path, prior_path, _ = small_market
        views_path = write_views(tmp / "views.json", [
            {"kind": "MeanLocation", "columns": ["XM"], "direction": "=",
             "target": {"mode": "Absolute", "value": 0.0}},
            {"kind": "MeanLocation", "columns": ["XM"], "direction": "=",
             "target": {"mode": "Absolute", "value": 0.01}},
        ])
        assert main(["solve", "--panel", str(panel_path), "--views",
                     str(views_path), "--out", str(tmp / "o.txt")]) == 3

    def test_iteration_cap_exit_4(self, small_market):
        tmp, panel_path, prior_path, _ = small_market
        views_path = write_views(tmp / "views.json", [{
            "kind": "MeanLocation", "columns": ["XM"], "direction": "=",
            "target": {"mode": "KappaSigma", "value": 2.0}}])
        assert main(["solve", "--panel", str(panel_path), "--views",
                     str(views_path), "--out", str(tmp / "o.txt"),
                     "--max-iter", "1"]) == 4

    def test_deterministic_outputs(self, small_market):
        tmp, panel_path, prior_path, j = small_market
        views_path = write_views(tmp / "views.json", [{
            "kind": "MeanLocation", "columns": ["XM"], "direction": "=",
            "target": {"mode": "KappaSigma", "value": 0.5}}])
        out1, out2 = tmp / "a.txt", tmp / "b.txt"
        main(["solve", "--panel", str(panel_path), "--views", str(views_path),
              "--out", str(out1)])
        main(["solve", "--panel", str(panel_path), "--views", str(views_path),
              "--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()


class TestCompareAnalytical:
    def test_two_sigma_mean_view(self, tmp_path, capsys):
        model_path = tmp_path / "model.json"
        model_path.write_text(json.dumps({"mu": [0.0], "sigma": [[1.0]]}))
        views_path = tmp_path / "nviews.json"
        views_path.write_text(json.dumps({"Q": [[1.0]], "mu_Q": [2.0],
                                          "G": None, "sigma_G": None}))
        code = main(["compare-analytical", "--model", str(model_path),
                     "--normal-views", str(views_path), "--j", "20000",
                     "--seed", "3"])
        assert code == 0
        output = capsys.readouterr().out
        assert "mu[0]" in output and "sigma[0,0]" in output


class TestFrontierCommand:
    def test_writes_csv(self, tmp_path):
        from entropool.casestudy import (FACTOR_NAMES, case_study_book,
                                         case_study_history)
        from entropool.options import BootstrapConfig, kernel_bootstrap, save_book
        from entropool.scenarios import save_panel_csv

        history = case_study_history(t_obs=40, seed=2)
        panel, _ = kernel_bootstrap(history, BootstrapConfig(j=300, seed=1),
                                    factor_names=FACTOR_NAMES)
        panel_path = tmp_path / "panel.csv"
        save_panel_csv(panel, panel_path)
        book_path = tmp_path / "book.json"
        save_book(case_study_book(), book_path)
        out = tmp_path / "frontier.csv"
        code = main(["frontier", "--panel", str(panel_path), "--book",
                     str(book_path), "--lambdas", "0", "1", "1000",
                     "--position-cap", "50", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("lambda,")
        assert len(lines) == 4
        # the extreme-lambda row is the zero book
        last = [float(tok) for tok in lines[-1].split(",")]
        assert last[0] == 1000.0
        np.testing.assert_allclose(last[1:10], 0.0, atol=1e-8)
        # expected p&l nonincreasing down the lambda grid
        expected_col = [float(line.split(",")[-2]) for line in lines[1:]]
        assert all(a >= b - 1e-12 for a, b in zip(expected_col, expected_col[1:]))


class TestDemoCommand:
    def test_writes_dataset(self, tmp_path):
        out_dir = tmp_path / "demo"
        code = main(["demo", "--out-dir", str(out_dir), "--rows", "60",
                     "--j", "200", "--seed", "5"])
        assert code == 0
        assert (out_dir / "panel.csv").exists()
        assert (out_dir / "panel.json").exists()
        payload = json.loads((out_dir / "views.json").read_text())
        assert [u["user_id"] for u in payload["users"]] == [
            "spread_analyst", "realized_vol_analyst", "macro_analyst"]
        book = json.loads((out_dir / "book.json").read_text())
        assert len(book) == 9
