import csv
import json
from pathlib import Path

import numpy as np
import pytest

from rhoest.cli import bundled_scenarios, main

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def _run(tmp_path, cfg, *extra):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return main(["--config", str(path), "--out", str(tmp_path / "out"), *extra])


def test_uniform_shift_demo(tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(CONFIGS / "uniform-shift-estimate.json"), "--out", str(out)]) == 0
    rep = json.loads((out / "estimate.json").read_text())
    # regenerate the data the config describes and compare with the midrange
    from rhoest.sim import draw_sample
    X = draw_sample("translation", {"shape": "uniform", "theta": 0.2}, 50,
                    np.random.default_rng(np.random.SeedSequence(11)))
    mid = 0.5 * (X.min() + X.max())
    assert abs(rep["estimate"]["params"][0] - mid) <= 0.5 - 0.5 * (X.max() - X.min()) + 1e-3
    assert rep["upsilon"]["minimum"] == 0.0
    assert rep["net_size"] == 2001
    assert rep["slack_set_size"] >= 1


def test_histogram_demo(tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(CONFIGS / "histogram-estimate.json"), "--out", str(out)]) == 0
    rep = json.loads((out / "estimate.json").read_text())
    cfg = json.loads((CONFIGS / "histogram-estimate.json").read_text())
    from rhoest.sim import draw_sample
    g = cfg["data"]["generator"]
    X = draw_sample("histogram", g["truth"], g["n"], np.random.default_rng(np.random.SeedSequence(g["seed"])))
    edges = np.asarray(cfg["model"]["partition"])
    freq = np.histogram(X, bins=edges)[0] / X.size
    np.testing.assert_allclose(rep["estimate"]["params"], freq, atol=1 / cfg["model"]["resolution"])


def test_select_demo(tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(CONFIGS / "histogram-select.json"), "--out", str(out)]) == 0
    rep = json.loads((out / "select.json").read_text())
    assert rep["selected_model"] == "histogram-2"
    assert rep["weight_sum"] <= 1.0


def test_estimate_inline_values_and_roundtrip(tmp_path):
    cfg = {"command": "estimate",
           "model": {"kind": "translation", "shape": "laplace",
                     "theta": {"min": -2, "max": 2, "step": 0.01}},
           "data": {"values": [0.3, -0.1, 0.8, 0.2, 0.5, -0.4, 1.1]}}
    assert _run(tmp_path, cfg) == 0
    rep = json.loads((tmp_path / "out" / "estimate.json").read_text())
    # the embedded config re-runs to the same estimate
    again = tmp_path / "again"
    again.mkdir()
    assert _run(again, rep["config"]) == 0
    rep2 = json.loads((again / "out" / "estimate.json").read_text())
    assert rep2["estimate"] == rep["estimate"]
    assert rep2["upsilon"] == rep["upsilon"]


def test_estimate_from_csv(tmp_path):
    data = tmp_path / "x.csv"
    data.write_text("x\n0.1\n0.4\n0.35\n0.2\n")
    cfg = {"command": "estimate", "model": {"kind": "uniform_shift",
                                             "theta": {"min": -1, "max": 1, "step": 0.05}},
           "data": {"csv": str(data)}}
    assert _run(tmp_path, cfg) == 0
    rep = json.loads((tmp_path / "out" / "estimate.json").read_text())
    th = rep["estimate"]["params"][0]
    assert 0.4 - 0.5 - 1e-9 <= th <= 0.1 + 0.5 + 1e-9


def test_sequence_estimate(tmp_path):
    cfg = {"command": "estimate", "model": {"kind": "sequence", "alphabet": "ab"},
           "data": {"values": ["a", "ab", "abb", "a", "abba"]}}
    assert _run(tmp_path, cfg) == 0
    rep = json.loads((tmp_path / "out" / "estimate.json").read_text())
    assert rep["upsilon"]["minimum"] == 0.0


def test_simulate_bundled(tmp_path):
    cfg = {"command": "simulate",
           "scenario": {"name": "quick", "kind": "translation", "n_list": [10, 20],
                        "replications": 4, "estimators": ["rho", "mean", "median", "mle_grid"],
                        "losses": ["sq"], "truth": {"shape": "gaussian"},
                        "model": {"half_width": 3.0, "step": 0.05}}}
    assert _run(tmp_path, cfg, "--seed", "5") == 0
    out = tmp_path / "out"
    with open(out / "quick.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["scenario", "estimator", "n", "replications", "loss_name", "mean",
                       "std_err", "q05", "q50", "q95"]
    assert len(rows) == 1 + 4 * 2
    assert (out / "quick.csv").read_bytes().endswith(b"\n")
    payload = json.loads((out / "quick.json").read_text())
    assert payload["run_config"]["scenario"]["seed"] == 5
    # the echoed run config reproduces the numbers
    again = tmp_path / "again"
    again.mkdir()
    assert _run(again, payload["run_config"]) == 0
    assert (again / "out" / "quick.csv").read_text() == (out / "quick.csv").read_text()


def test_bundled_names():
    names = bundled_scenarios()
    for want in ("translation-compare", "linreg-uniform-errors", "translation-uniform",
                 "translation-cauchy", "gaussian-outliers", "mle-recovery",
                 "histogram-frequencies", "sequence-words"):
        assert want in names


@pytest.mark.parametrize("cfg", [
    {"command": "estimate", "bogus": 1},
    {"command": "launch"},
    {"command": "estimate", "model": {"kind": "translation", "theta": {"min": 0, "max": 1, "step": -1}},
     "data": {"values": [1.0]}},
    {"command": "estimate", "model": {"kind": "uniform_shift", "theta": {"min": 0, "max": 1, "step": 0.1}}},
    {"command": "estimate", "model": {"kind": "histogram", "partition": [0, 1, 2], "resolution": 0.3},
     "data": {"values": [0.5]}},
    {"command": "simulate", "scenario": "no-such-scenario"},
    {"command": "simulate", "scenario": {"name": "x", "kind": "translation", "n_list": [5],
                                         "replications": 1, "truth": {"colour": 2}}},
])
def test_config_errors_exit_2(tmp_path, cfg):
    assert _run(tmp_path, cfg) == 2


def test_malformed_json_exit_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["--config", str(path)]) == 2
    assert main(["--config", str(tmp_path / "missing.json")]) == 2


def test_verify_command(tmp_path):
    assert _run(tmp_path, {"command": "verify", "budget": 0.1}) == 0
    rep = json.loads((tmp_path / "out" / "verify.json").read_text())
    assert rep["passed"] is True
    assert rep["checks"]


def test_numerical_failure_exit_3(tmp_path, monkeypatch):
    from rhoest import cli
    from rhoest.errors import NumericalError

    def boom(*a, **k):
        raise NumericalError("quadrature interval budget exhausted", 1.0)

    monkeypatch.setattr(cli, "rho_estimate", boom)
    cfg = {"command": "estimate", "model": {"kind": "uniform_shift",
                                             "theta": {"min": 0, "max": 1, "step": 0.5}},
           "data": {"values": [0.5]}}
    assert _run(tmp_path, cfg) == 3
