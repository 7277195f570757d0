from __future__ import annotations

import json

import pytest

from millsim.config import ExperimentConfig, load_config, save_config


class TestDefaults:
    def test_base_parameter_table(self):
        config = ExperimentConfig()
        assert config.world.n_agents == 10
        assert config.world.spawn_width == 1.2
        assert config.horizon == 1000
        assert config.window == 450
        assert config.world.dt == pytest.approx(1.0 / 7.5)
        assert config.world.v_max == 0.2
        assert config.world.omega_max == 2.0
        assert config.world.sense_range == 3.6
        assert config.world.fov == 0.4
        assert config.population_size == 100
        assert config.epochs == 1000

    def test_evolution_table_defaults(self):
        evo = ExperimentConfig().evolution
        assert evo.starting_nodes == 10
        assert evo.starting_edges == 20
        assert evo.crossover_rate == 0.5
        assert evo.mutation_rate == 0.9
        assert evo.add_node_rate == 0.55
        assert evo.delete_node_rate == 0.45
        assert evo.add_edge_rate == 0.6
        assert evo.delete_edge_rate == 0.4
        assert evo.tournament_size_factor == 0.1
        assert evo.tournament_best_net_factor == 0.9
        assert evo.random_factor == 0.10
        assert evo.num_mutations == 3
        assert evo.node_mutation_weights == {"threshold": 1.0}
        assert evo.edge_mutation_weights == {"weight": 0.65, "delay": 0.35}
        assert evo.num_best == 4

    def test_population_size_is_authoritative(self):
        config = ExperimentConfig(population_size=24)
        assert config.evolution.population_size == 24


class TestValidation:
    def test_window_exceeding_horizon_rejected(self):
        config = ExperimentConfig(horizon=100, window=200)
        with pytest.raises(ValueError, match="window"):
            config.validate()

    def test_optimizer_controller_pairing_enforced(self):
        config = ExperimentConfig(optimizer="cmaes", controller="snn")
        with pytest.raises(ValueError, match="controller"):
            config.validate()

    def test_unknown_optimizer_rejected(self):
        config = ExperimentConfig(optimizer="hillclimb")
        with pytest.raises(ValueError, match="optimizer"):
            config.validate()


class TestSerialization:
    def test_round_trip(self, tmp_path):
        config = ExperimentConfig(horizon=120, window=50, train_seed=9,
                                  optimizer="cmaes", controller="symbolic")
        path = tmp_path / "config.json"
        save_config(config, path)
        loaded = load_config(path)
        assert loaded.to_dict() == config.to_dict()

    def test_controller_follows_optimizer_when_omitted(self, tmp_path):
        doc = {"optimizer": "cmaes"}
        path = tmp_path / "config.json"
        path.write_text(json.dumps(doc))
        assert load_config(path).controller == "symbolic"

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"not_a_key": 1}))
        with pytest.raises(ValueError, match="unknown config keys"):
            load_config(path)
