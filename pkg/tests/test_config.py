"""Configuration loading, aliases, and sweep parameter paths."""

import json

import pytest

from colosim.cluster import ConfigurationError
from colosim.config import (ExperimentConfig, clone_config, config_from_dict,
                            load_config, set_path)
from colosim.migration import MigrationConfig


class TestConfigFromDict:
    def test_defaults(self):
        cfg = config_from_dict({})
        assert cfg.slots == 1000
        assert cfg.apps_per_slot == 10
        assert cfg.migration is None
        assert cfg.cluster.node_count == 100

    def test_sections_and_aliases(self):
        cfg = config_from_dict({
            "seed": 4,
            "slots": 20,
            "cluster": {"node_count": 10, "values_per_key": 5},
            "workload": {"p_m": 0.9, "lifetime_min": 5, "lifetime_max": 9},
            "scheduler": {"p_s": 0.05},
            "attack": {"k": 3, "spreading": False, "noise": 0.1},
            "migration": {"p_mi": 0.3, "destination": "cluster-wide", "t": 70},
        })
        assert cfg.seed == 4
        assert cfg.cluster.node_count == 10
        assert cfg.workload.p_m == 0.9
        assert cfg.scheduler.skip_probability == 0.05
        assert cfg.attack.instance_count == 3
        assert cfg.attack.use_spreading_label is False
        assert cfg.attack.replication_noise == 0.1
        assert cfg.migration.probability == 0.3
        assert cfg.migration.destination == "cluster-wide"
        assert cfg.migration.success_threshold == 70

    def test_null_migration_section(self):
        assert config_from_dict({"migration": None}).migration is None

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"bogus": 1})
        with pytest.raises(ConfigurationError):
            config_from_dict({"attack": {"bogus": 1}})

    def test_invalid_values_rejected(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"slots": 0})
        with pytest.raises(ConfigurationError):
            config_from_dict({"workload": {"p_m": 2.0}})
        with pytest.raises(ConfigurationError):
            config_from_dict({"scheduler": {"p_s": -0.1}})

    def test_cluster_lists_become_tuples(self):
        cfg = config_from_dict({"cluster": {"cpu_choices": [4, 8]}})
        assert cfg.cluster.cpu_choices == (4, 8)


class TestLoadConfig:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"seed": 9, "slots": 5}))
        cfg = load_config(str(path))
        assert (cfg.seed, cfg.slots) == (9, 5)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(str(tmp_path / "absent.json"))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigurationError):
            load_config(str(path))

    def test_non_object_root(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigurationError):
            load_config(str(path))


class TestSetPath:
    def test_top_level(self):
        cfg = ExperimentConfig()
        set_path(cfg, "slots", 17)
        assert cfg.slots == 17

    def test_section_with_alias(self):
        cfg = ExperimentConfig()
        set_path(cfg, "attack.k", 4)
        set_path(cfg, "scheduler.p_s", 0.02)
        set_path(cfg, "workload.p_mn", 0.9)
        assert cfg.attack.instance_count == 4
        assert cfg.scheduler.skip_probability == 0.02
        assert cfg.workload.p_mn == 0.9

    def test_missing_migration_section_is_created(self):
        cfg = ExperimentConfig()
        assert cfg.migration is None
        set_path(cfg, "migration.p_mi", 0.25)
        assert isinstance(cfg.migration, MigrationConfig)
        assert cfg.migration.probability == 0.25

    def test_unknown_paths(self):
        cfg = ExperimentConfig()
        for path in ("bogus", "attack.bogus", "nosection.k", "a.b.c"):
            with pytest.raises(ConfigurationError):
                set_path(cfg, path, 1)


def test_clone_is_independent():
    cfg = ExperimentConfig()
    copy = clone_config(cfg)
    copy.attack.instance_count = 99
    copy.slots = 1
    assert cfg.attack.instance_count == 1
    assert cfg.slots == 1000
