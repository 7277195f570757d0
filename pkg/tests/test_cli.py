from __future__ import annotations

import json

import pytest

from millsim.cli import main
from millsim.config import ExperimentConfig, save_config
from millsim.controllers import SymbolicParams
from millsim.snn import network_to_json
from test_snn import minimal_network, wired_network


@pytest.fixture
def tiny_config_path(tmp_path):
    config = ExperimentConfig(horizon=60, window=30, population_size=8,
                              epochs=2, workers=1, optimizer="eons",
                              controller="snn", train_seed=42)
    path = tmp_path / "config.json"
    save_config(config, path)
    return path


@pytest.fixture
def params_path(tmp_path):
    path = tmp_path / "params.json"
    path.write_text(SymbolicParams(0.2, 0.2, 1.0, -1.0).to_json())
    return path


class TestValidateNet:
    def test_valid_network_ok(self, tmp_path, capsys):
        path = tmp_path / "net.json"
        path.write_text(network_to_json(wired_network()))
        assert main(["validate-net", str(path)]) == 0
        assert "OK" in capsys.readouterr().out

    def test_invalid_network_lists_problems(self, tmp_path, capsys):
        doc = json.loads(network_to_json(wired_network()))
        doc["synapses"][0]["weight"] = 300
        doc["neurons"][0]["threshold"] = -5
        path = tmp_path / "net.json"
        path.write_text(json.dumps(doc))
        assert main(["validate-net", str(path)]) == 1
        out = capsys.readouterr().out
        assert "weight 300" in out
        assert "threshold -5" in out

    def test_missing_io_reported(self, tmp_path, capsys):
        doc = json.loads(network_to_json(wired_network()))
        doc["neurons"] = doc["neurons"][1:]
        doc["io"]["inputs"] = doc["io"]["inputs"][1:]
        path = tmp_path / "net.json"
        path.write_text(json.dumps(doc))
        assert main(["validate-net", str(path)]) == 1


class TestSimulate:
    def test_reports_circliness(self, tiny_config_path, params_path,
                                capsys):
        code = main(["simulate", "--config", str(tiny_config_path),
                     "--artifact", str(params_path), "--seed", "42"])
        assert code == 0
        assert "circliness" in capsys.readouterr().out

    def test_network_artifact(self, tiny_config_path, tmp_path, capsys):
        net_path = tmp_path / "net.json"
        net_path.write_text(network_to_json(minimal_network()))
        code = main(["simulate", "--config", str(tiny_config_path),
                     "--artifact", str(net_path)])
        assert code == 0


class TestReplayAndSweep:
    def test_replay_writes_traces_and_frames(self, tiny_config_path,
                                             params_path, tmp_path):
        out = tmp_path / "replay"
        code = main(["replay", "--config", str(tiny_config_path),
                     "--artifact", str(params_path), "--seed", "42",
                     "--output", str(out), "--frames-every", "30"])
        assert code == 0
        assert (out / "trajectory.jsonl").exists()
        assert (out / "metrics.csv").exists()
        assert len(list((out / "frames").glob("*.png"))) == 2

    def test_sweep_writes_summary(self, tiny_config_path, params_path,
                                  tmp_path, capsys):
        out = tmp_path / "sweep"
        code = main(["sweep", "--config", str(tiny_config_path),
                     "--artifact", str(params_path), "--seeds", "6",
                     "--output", str(out)])
        assert code == 0
        assert (out / "sweep.csv").exists()
        assert (out / "sweep_summary.json").exists()
        summary = json.loads(capsys.readouterr().out)
        assert summary["count"] == 6


class TestEvolve:
    def test_evolve_snn_writes_run_outputs(self, tiny_config_path,
                                           tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["evolve-snn", "--config", str(tiny_config_path),
                     "--output", str(out), "--seeds", "3"])
        assert code == 0
        assert (out / "stats.csv").exists()
        assert (out / "best.json").exists()
        assert (out / "training_curve.png").exists()
        assert "best circliness" in capsys.readouterr().out

    def test_evolve_symbolic_multi_seed_dirs(self, tmp_path):
        config = ExperimentConfig(horizon=60, window=30, population_size=8,
                                  epochs=1, workers=1, optimizer="cmaes",
                                  controller="symbolic")
        cfg_path = tmp_path / "config.json"
        save_config(config, cfg_path)
        out = tmp_path / "runs"
        code = main(["evolve-symbolic", "--config", str(cfg_path),
                     "--output", str(out), "--seeds", "1", "2"])
        assert code == 0
        assert (out / "seed_1" / "stats.csv").exists()
        assert (out / "seed_2" / "stats.csv").exists()

    def test_cli_overrides_worker_and_epochs(self, tiny_config_path,
                                             tmp_path):
        out = tmp_path / "run"
        code = main(["evolve-snn", "--config", str(tiny_config_path),
                     "--output", str(out), "--seeds", "5",
                     "--epochs", "1", "--workers", "1"])
        assert code == 0
        from millsim.harness import read_stats
        assert len(read_stats(out / "stats.csv")) == 1
