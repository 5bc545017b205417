"""Experiment configuration: dataclass sections, JSON loading, sweep paths."""

from __future__ import annotations

import copy
import dataclasses
import json
from dataclasses import dataclass, field

from .attack import AttackConfig
from .cluster import ClusterGenConfig, ConfigurationError
from .migration import MigrationConfig
from .scheduler import SchedulerConfig
from .workload import WorkloadConfig


@dataclass
class ExperimentConfig:
    seed: int = 0
    slots: int = 1000
    apps_per_slot: int = 10
    # victims designated over the whole run, spread evenly across slots
    victim_count: int = 100
    retry_limit: int = 3
    cluster: ClusterGenConfig = field(default_factory=ClusterGenConfig)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    attack: AttackConfig = field(default_factory=AttackConfig)
    migration: MigrationConfig = None

    def validate(self):
        if self.slots < 1:
            raise ConfigurationError("slots must be >= 1")
        if self.apps_per_slot < 0:
            raise ConfigurationError("apps_per_slot must be >= 0")
        if self.victim_count < 0:
            raise ConfigurationError("victim_count must be >= 0")
        if self.retry_limit < 0:
            raise ConfigurationError("retry_limit must be >= 0")
        self.workload.validate()
        self.attack.validate()
        try:
            self.scheduler.validate()
        except ValueError as e:
            raise ConfigurationError(str(e)) from None
        if self.migration is not None:
            self.migration.validate()


_SECTIONS = {
    "cluster": ClusterGenConfig,
    "workload": WorkloadConfig,
    "scheduler": SchedulerConfig,
    "attack": AttackConfig,
    "migration": MigrationConfig,
}

# friendly sweep/config aliases -> real field names
_ALIASES = {
    "attack": {"k": "instance_count", "spreading": "use_spreading_label",
               "noise": "replication_noise"},
    "scheduler": {"p_s": "skip_probability"},
    "migration": {"p_mi": "probability", "t": "success_threshold"},
    "cluster": {},
    "workload": {},
    "experiment": {},
}


def _build_section(cls, data: dict, section: str):
    fields = {f.name for f in dataclasses.fields(cls)}
    aliases = _ALIASES.get(section, {})
    kwargs = {}
    for key, value in data.items():
        name = aliases.get(key, key)
        if name not in fields:
            raise ConfigurationError(f"unknown {section} option {key!r}")
        if isinstance(value, list):
            value = tuple(value) if section == "cluster" else value
        kwargs[name] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    kwargs = {}
    for section, cls in _SECTIONS.items():
        if section in data:
            raw = data.pop(section)
            if raw is None:
                kwargs[section] = None
            else:
                kwargs[section] = _build_section(cls, raw, section)
    top_fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key, value in data.items():
        if key not in top_fields:
            raise ConfigurationError(f"unknown config option {key!r}")
        kwargs[key] = value
    cfg = ExperimentConfig(**kwargs)
    cfg.validate()
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config file {path} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise ConfigurationError("config root must be a JSON object")
    return config_from_dict(data)


def set_path(config: ExperimentConfig, path: str, value):
    """Assign one dotted parameter path, e.g. "attack.k" or "slots"."""
    parts = path.split(".")
    if len(parts) == 1:
        section, name = "experiment", parts[0]
        target = config
    elif len(parts) == 2 and parts[0] in _SECTIONS:
        section, name = parts
        target = getattr(config, section)
        if target is None:
            target = _SECTIONS[section]()
            setattr(config, section, target)
    else:
        raise ConfigurationError(f"unknown parameter path {path!r}")
    name = _ALIASES.get(section, {}).get(name, name)
    fields = {f.name for f in dataclasses.fields(type(target))}
    if name not in fields:
        raise ConfigurationError(f"unknown parameter path {path!r}")
    setattr(target, name, value)


def clone_config(config: ExperimentConfig) -> ExperimentConfig:
    return copy.deepcopy(config)
