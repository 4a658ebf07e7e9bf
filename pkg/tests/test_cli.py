"""Tests for the lqf command-line interface."""

import json

import pytest

from lqfsim import __version__
from lqfsim.cli import main


class TestFluidCommand:
    def test_prints_csv(self, capsys):
        code = main(["fluid", "--lambda", "0.7", "--K", "2", "--T", "0.01"])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith(f"# lqfsim {__version__} spec=")
        assert lines[1] == "t,u1,u2"
        assert float(lines[2].split(",")[1]) == 0.0

    def test_bad_lambda_is_config_error(self, capsys):
        code = main(["fluid", "--lambda", "1.5", "--K", "1", "--T", "1.0"])
        assert code == 2
        assert "configuration error" in capsys.readouterr().err


class TestOracleCommand:
    def test_prints_distribution(self, capsys):
        code = main(["oracle", "--n", "2", "--d", "2", "--lambda", "0.7",
                     "--t", "0.5"])
        assert code == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0].startswith("# lqfsim")
        assert "truncation_error_bound=" in out[0]
        assert out[1] == "state,probability"
        total = sum(float(line.split(",")[1]) for line in out[2:])
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_domain_error_exit_code(self, capsys):
        # enormous uniformization constant: Poisson series refused
        code = main(["oracle", "--n", "3", "--d", "2", "--lambda", "0.7",
                     "--t", "1000"])
        assert code == 3
        assert "numerical-domain error" in capsys.readouterr().err


class TestRunCommand:
    def test_runs_spec_and_lists_files(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({
            "kind": "tradeoff", "n": [10], "d": [2], "lambda": [0.7],
            "t": 2.0, "replications": 8, "master_seed": 1,
            "output_dir": str(tmp_path / "out")}))
        code = main(["run", str(spec)])
        assert code == 0
        printed = capsys.readouterr().out.strip().splitlines()
        assert printed and printed[0].endswith("tradeoff.csv")

    def test_out_and_seed_overrides(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({
            "kind": "tradeoff", "n": [10], "d": [2], "lambda": [0.7],
            "t": 2.0, "replications": 8, "master_seed": 1,
            "output_dir": str(tmp_path / "ignored")}))
        code = main(["run", str(spec), "--out", str(tmp_path / "alt"),
                     "--seed", "99"])
        assert code == 0
        assert (tmp_path / "alt" / "tradeoff.csv").exists()
        assert not (tmp_path / "ignored").exists()

    def test_missing_spec_is_config_error(self, tmp_path, capsys):
        code = main(["run", str(tmp_path / "nope.json")])
        assert code == 2

    def test_invalid_spec_is_config_error(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"kind": "histogram", "n": [5]}))
        code = main(["run", str(spec)])
        assert code == 2
        assert "'d'" in capsys.readouterr().err
