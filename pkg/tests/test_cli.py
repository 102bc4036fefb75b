"""Command-line interface."""

import json
import subprocess
import sys

import pytest

from dp_relu.cli import main


def run_cli(*argv):
    return main(list(argv))


class TestCalibrate:
    def test_zcdp(self, capsys):
        assert run_cli("calibrate", "--epsilon", "1.0", "--delta", "1e-5") == 0
        out = capsys.readouterr().out
        assert "9.597051824" in out

    def test_shuffle_with_warning(self, capsys):
        code = run_cli(
            "calibrate", "--epsilon", "0.2", "--delta", "1e-5",
            "--n", "20000", "--regime", "shuffle_amplified",
        )
        assert code == 0
        captured = capsys.readouterr()
        assert "in_regime=False" in captured.out
        assert "WARNING" in captured.err

    def test_delta_from_n_power(self, capsys):
        assert run_cli("calibrate", "--epsilon", "0.5", "--n", "1000") == 0
        assert "delta=" in capsys.readouterr().out

    def test_requires_epsilon(self):
        with pytest.raises(SystemExit):
            run_cli("calibrate")


class TestTrainAndSweep:
    def test_train_synthetic(self, capsys):
        code = run_cli(
            "train", "--synthetic", "d=3", "n=200", "sigma=0.3",
            "--algorithm", "dp_mbglmtron", "--epsilon", "0.5",
            "--eta", "0.1", "--batch", "40", "--estimating", "10", "--seed", "0",
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "final_train=" in out and "excess_risk=" in out

    def test_sweep_writes_files(self, tmp_path, capsys):
        code = run_cli(
            "sweep", "--synthetic", "d=3", "n=200", "sigma=0.3",
            "--algorithm", "glmtron", "--epsilon", "0.5",
            "--eta", "0.05", "--seeds", "0", "1", "--out", str(tmp_path / "res"),
        )
        assert code == 0
        assert (tmp_path / "res" / "summary.csv").exists()
        assert (tmp_path / "res" / "manifest.json").exists()

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfg = {
            "synthetic": {"d": 3, "n": 200, "sigma": 0.3},
            "algorithms": ["glmtron"],
            "epsilons": [0.5],
            "seeds": [0],
            "eta": 0.05,
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        code = run_cli("train", "--config", str(path), "--seed", "3")
        assert code == 0
        assert "seed=3" in capsys.readouterr().out

    def test_csv_requires_target(self, tmp_path):
        (tmp_path / "d.csv").write_text("a,b\n1,2\n")
        with pytest.raises(SystemExit, match="target"):
            run_cli("train", "--csv", str(tmp_path / "d.csv"))


class TestCheckAndAttack:
    def test_check_gaussian(self, capsys):
        code = run_cli("check", "--synthetic", "d=4", "n=100", "sigma=0.2",
                       "--samples", "100000", "--seed", "0")
        assert code == 0
        out = capsys.readouterr().out
        assert out.count("[ok]") == 4

    def test_attack_smoke(self, tmp_path, capsys):
        cfg = tmp_path / "a.json"
        cfg.write_text(json.dumps({"trials": 2, "n_fresh": 50, "epochs": 5}))
        code = run_cli("attack", "--synthetic", "d=4", "n=60", "sigma=1.0",
                       "--config", str(cfg))
        assert code == 0
        assert "separation_z=" in capsys.readouterr().out


class TestEntryPoint:
    def test_version_via_subprocess(self):
        out = subprocess.run(
            [sys.executable, "-m", "dp_relu.cli", "--version"],
            capture_output=True, text=True, check=True,
        )
        assert "dp-relu" in out.stdout
