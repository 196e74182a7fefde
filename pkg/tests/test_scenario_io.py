import json
import subprocess
import sys

import numpy as np
import pytest

from nsklab.errors import ParseError, ValidationError
from nsklab.runner import run_scenario
from nsklab.scenario import config_from_dict, parse_config, parse_sweep_config, serialize_config


def minimal_linear_decay(seed=11):
    return {
        "kind": "linear-decay",
        "seed": seed,
        "params": {"mu": 1.0, "nu": 0.8, "kappa": 0.7875, "rho_ref": 1.0},
        "grid": {"dim": 2, "n": 32, "box_len": 24.0},
        "data": {"kind": "riesz_divergence", "gamma": 1.0, "amplitude": 1.0},
        "times": {"t_min": 0.5, "t_max": 8.0, "count": 10},
        "exponents": {"p": "inf", "q": 2.0, "j": 0},
        "band": "low",
        "fit_window": [1.0, 6.0],
        "trust_mode": "edge_leak",
    }


def minimal_nonlinear(seed=5):
    return {
        "kind": "nonlinear-run",
        "seed": seed,
        "params": {"mu": 1.0, "nu": 1.0, "kappa": 1.0, "rho_ref": 1.0, "pressure_k": 0.5},
        "grid": {"dim": 2, "n": 16, "box_len": 8.0},
        "amplitude": 0.02,
        "t_end": 0.5,
        "dt": 0.1,
    }


class TestParseConfig:
    def test_minimal_valid_with_defaults_echoed(self):
        cfg = parse_config(json.dumps(minimal_linear_decay()))
        assert cfg.kind == "linear-decay"
        assert cfg.tol_exp == 0.1  # default filled
        text = serialize_config(cfg)
        assert '"tol_exp": 0.1' in text  # defaults echoed on serialization

    def test_unknown_key_rejected(self):
        raw = minimal_linear_decay()
        raw["params"]["kapa_star"] = 1.0
        with pytest.raises(ValidationError, match="unknown key 'kapa_star'"):
            config_from_dict(raw)

    def test_unknown_top_level_key(self):
        raw = minimal_linear_decay()
        raw["bogus"] = 1
        with pytest.raises(ValidationError, match="unknown key 'bogus'"):
            config_from_dict(raw)

    def test_round_trip_identity(self):
        cfg = parse_config(json.dumps(minimal_linear_decay()))
        again = parse_config(serialize_config(cfg))
        assert again == cfg
        cfg2 = parse_config(json.dumps(minimal_nonlinear()))
        assert parse_config(serialize_config(cfg2)) == cfg2

    def test_parse_error_carries_position(self):
        with pytest.raises(ParseError) as err:
            parse_config("{ not json }")
        assert err.value.line == 1
        assert err.value.column is not None

    def test_seed_mandatory(self):
        raw = minimal_linear_decay()
        del raw["seed"]
        with pytest.raises(ValidationError, match="seed"):
            config_from_dict(raw)

    def test_infinite_exponent_round_trip(self):
        cfg = parse_config(json.dumps(minimal_linear_decay()))
        assert np.isinf(cfg.exponents.p)
        assert '"p": "inf"' in serialize_config(cfg)

    def test_missing_required_block(self):
        raw = minimal_linear_decay()
        del raw["grid"]
        with pytest.raises(ValidationError, match="requires key 'grid'"):
            config_from_dict(raw)

    def test_sweep_parsing(self):
        sweep = {
            "scenarios": [
                {"name": "a", "config": minimal_nonlinear(1)},
                {"name": "b", "config": minimal_nonlinear(2)},
            ]
        }
        parsed = parse_sweep_config(json.dumps(sweep))
        assert [n for n, _ in parsed.scenarios] == ["a", "b"]
        with pytest.raises(ValidationError):
            parse_sweep_config(json.dumps({"scenarios": [], "x": 1}))


class TestRunScenario:
    def test_nonlinear_run_artifacts(self, tmp_path):
        cfg = config_from_dict(minimal_nonlinear())
        outcome = run_scenario(cfg, tmp_path / "run")
        assert (tmp_path / "run" / "manifest.json").exists()
        assert (tmp_path / "run" / "report.json").exists()
        assert (tmp_path / "run" / "series" / "aggregate_N.csv").exists()
        assert (tmp_path / "run" / "plots" / "aggregate_N.svg").exists()
        report = json.loads((tmp_path / "run" / "report.json").read_text())
        assert report["pass"] is True
        assert report["config"]["kind"] == "nonlinear-run"
        assert report["version"]

    def test_determinism_bitwise_csv(self, tmp_path):
        cfg = config_from_dict(minimal_nonlinear())
        run_scenario(cfg, tmp_path / "a")
        run_scenario(cfg, tmp_path / "b")
        for name in ("aggregate_N.csv", "pair_linf_j0.csv"):
            a = (tmp_path / "a" / "series" / name).read_bytes()
            b = (tmp_path / "b" / "series" / name).read_bytes()
            assert a == b

    def test_symbol_verify_report(self, tmp_path):
        cfg = config_from_dict({"kind": "symbol-verify", "seed": 9, "samples_per_regime": 40})
        outcome = run_scenario(cfg, tmp_path / "sv")
        assert outcome.all_pass
        rep = outcome.report
        assert set(rep["regimes"]) == {"positive", "negative", "degenerate"}
        for row in rep["regimes"].values():
            assert row["max_relative_deviation"] <= 1e-10

    def test_linear_decay_3d_reports_paper_exponent(self, tmp_path):
        """The report row for N=3, (p,q,j)=(inf,2,0) predicts -0.75."""
        cfg = config_from_dict(
            {
                "kind": "linear-decay",
                "seed": 2,
                "params": {"mu": 1.0, "nu": 0.8, "kappa": 0.7875, "rho_ref": 1.0},
                "grid": {"dim": 3, "n": 16, "box_len": 12.0},
                "data": {"kind": "riesz_divergence", "gamma": 1.5, "amplitude": 1.0},
                "times": {"t_min": 0.5, "t_max": 6.0, "count": 8},
                "exponents": {"p": "inf", "q": 2.0, "j": 0},
                "band": "low",
                "fit_window": [1.0, 5.0],
                "trust_mode": "edge_leak",
            }
        )
        outcome = run_scenario(cfg, tmp_path / "ld3")
        assert outcome.report["decay"]["predicted_exponent"] == pytest.approx(-0.75)
        assert (tmp_path / "ld3" / "plots" / "pair_low.svg").exists()

    def test_ablation_scenario_artifacts(self, tmp_path):
        cfg = config_from_dict(
            {
                "kind": "ablation",
                "seed": 4,
                "params": {"mu": 1.0, "nu": 0.8, "kappa": 0.7875, "rho_ref": 1.0},
                "grid": {"dim": 2, "n": 64, "box_len": 48.0},
                "data": {"kind": "riesz_divergence", "gamma": 1.0, "support_radius": 11.0, "amplitude": 1.0},
                "times": {"t_min": 0.8, "t_max": 14.0, "count": 12},
                "exponents": {"p": "inf", "q": 2.0, "j": 0},
                "fit_window": [1.5, 10.0],
                "trust_mode": "edge_leak",
                "gap_threshold": 0.2,
            }
        )
        outcome = run_scenario(cfg, tmp_path / "abl")
        rep = outcome.report
        assert rep["generic"]["fitted_exponent"] > rep["divergence"]["fitted_exponent"]
        assert (tmp_path / "abl" / "series" / "theta_low_divergence.csv").exists()
        assert (tmp_path / "abl" / "series" / "theta_low_generic.csv").exists()

    def test_error_writes_partial_artifacts(self, tmp_path):
        raw = minimal_nonlinear()
        raw["grid"] = {"dim": 2, "n": 12, "box_len": 8.0}  # n not a power of two
        cfg = config_from_dict(raw)
        with pytest.raises(Exception):
            run_scenario(cfg, tmp_path / "bad")
        assert (tmp_path / "bad" / "manifest.json").exists()
        rep = json.loads((tmp_path / "bad" / "report.json").read_text())
        assert rep["pass"] is False
        assert "error" in rep


class TestCli:
    def _write(self, tmp_path, payload, name="cfg.json"):
        p = tmp_path / name
        p.write_text(json.dumps(payload))
        return p

    def test_cli_nonlinear_run_exit_zero(self, tmp_path):
        cfg_path = self._write(tmp_path, minimal_nonlinear())
        proc = subprocess.run(
            [sys.executable, "-m", "nsklab", "nonlinear-run", "--config", str(cfg_path), "--out", str(tmp_path / "o")],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert "PASS" in proc.stdout

    def test_cli_kind_mismatch(self, tmp_path):
        cfg_path = self._write(tmp_path, minimal_nonlinear())
        proc = subprocess.run(
            [sys.executable, "-m", "nsklab", "ablation", "--config", str(cfg_path), "--out", str(tmp_path / "o")],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 1
        assert "does not match" in proc.stderr

    def test_cli_env_out_dir(self, tmp_path, monkeypatch):
        import os

        cfg_path = self._write(tmp_path, minimal_nonlinear())
        env = dict(os.environ)
        env["NSKLAB_OUT"] = str(tmp_path / "envout")
        proc = subprocess.run(
            [sys.executable, "-m", "nsklab", "nonlinear-run", "--config", str(cfg_path)],
            capture_output=True,
            text=True,
            env=env,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "envout" / "report.json").exists()

    def test_cli_sweep(self, tmp_path):
        sweep = {
            "scenarios": [
                {"name": "s1", "config": minimal_nonlinear(1)},
                {"name": "s2", "config": minimal_nonlinear(2)},
            ]
        }
        cfg_path = self._write(tmp_path, sweep, "sweep.json")
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "nsklab",
                "sweep",
                "--config",
                str(cfg_path),
                "--out",
                str(tmp_path / "sw"),
                "--threads",
                "2",
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "sw" / "s1" / "report.json").exists()
        assert (tmp_path / "sw" / "s2" / "report.json").exists()

    def test_cli_bad_config_exit_one(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{ nope")
        proc = subprocess.run(
            [sys.executable, "-m", "nsklab", "linear-decay", "--config", str(p)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 1
