"""Random application spec generation for normal users, victims and noise."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .cluster import ClusterState, ConfigurationError, ResourceVector

# Rule dimensions, kept as plain strings for speed in the filter hot path.
NODE = "node"
APP = "app"
AFFINITY = "affinity"
ANTI_AFFINITY = "anti-affinity"
REQUIRED = "required"
PREFERRED = "preferred"

NORMAL = "normal"
VICTIM = "victim"
ATTACK = "attack"


@dataclass(frozen=True)
class AffinityRule:
    """One placement constraint on a label-value pair."""

    kind: str        # NODE | APP
    polarity: str    # AFFINITY | ANTI_AFFINITY
    strength: str    # REQUIRED | PREFERRED
    label: str
    value: str

    def __post_init__(self):
        if self.kind not in (NODE, APP):
            raise ValueError(f"bad rule kind {self.kind!r}")
        if self.polarity not in (AFFINITY, ANTI_AFFINITY):
            raise ValueError(f"bad rule polarity {self.polarity!r}")
        if self.strength not in (REQUIRED, PREFERRED):
            raise ValueError(f"bad rule strength {self.strength!r}")


@dataclass
class AppSpec:
    """A user submission: resources, own labels, affinity rules, role."""

    instance_id: str
    request: ResourceVector
    own_labels: dict
    rules: list
    role: str = NORMAL
    submit_slot: int = 0
    lifetime_slots: int = 1

    def required_rules(self) -> list:
        return [r for r in self.rules if r.strength == REQUIRED]

    def preferred_rules(self) -> list:
        return [r for r in self.rules if r.strength == PREFERRED]


@dataclass(frozen=True)
class AffinityPattern:
    """Exact per-category rule counts, written as a 4-digit code.

    Digits are: required node, preferred node, required inter-app,
    preferred inter-app. "2131" means 2 required node rules, 1 preferred
    node rule, 3 required inter-app rules, 1 preferred inter-app rule.
    """

    req_node: int
    pref_node: int
    req_app: int
    pref_app: int

    @classmethod
    def from_string(cls, code: str) -> "AffinityPattern":
        if len(code) != 4 or not code.isdigit():
            raise ConfigurationError(f"pattern must be 4 digits, got {code!r}")
        return cls(*(int(c) for c in code))


@dataclass
class WorkloadConfig:
    # per-key probability of carrying an own application label
    p_m: float = 0.5
    # per-key probability of generating a node affinity/anti-affinity rule
    p_mn: float = 0.5
    # per-key probability of generating an inter-app affinity/anti-affinity rule
    p_ma: float = 0.5
    # optional 4-digit pattern; overrides p_mn/p_ma when set
    pattern: str = None
    max_cpu: int = 8
    max_memory: int = 16
    max_disk: int = 16
    max_ports: int = 4
    # probability a generated rule is affinity (vs anti-affinity)
    affinity_ratio: float = 0.7
    # probability a generated rule is required (vs preferred), p_m mode only
    required_ratio: float = 0.5
    lifetime_min: int = 50
    lifetime_max: int = 200

    def validate(self):
        for name in ("p_m", "p_mn", "p_ma", "affinity_ratio", "required_ratio"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1], got {v}")
        if self.lifetime_min < 1 or self.lifetime_max < self.lifetime_min:
            raise ConfigurationError("bad lifetime bounds")
        if min(self.max_cpu, self.max_memory, self.max_disk, self.max_ports) < 1:
            raise ConfigurationError("request maxima must be >= 1")


def _draw_request(config: WorkloadConfig, rng: random.Random) -> ResourceVector:
    # minimum of 1 per dimension so every instance occupies capacity
    return ResourceVector(
        rng.randint(1, config.max_cpu),
        rng.randint(1, config.max_memory),
        rng.randint(1, config.max_disk),
        rng.randint(1, config.max_ports),
    )


def _draw_own_labels(config, cluster, rng) -> dict:
    labels = {}
    for key in cluster.universe.app_keys:
        if rng.random() < config.p_m:
            labels[key] = rng.choice(cluster.value_domains[key])
    return labels


def _draw_rule(kind, strength, key, cluster, config, rng) -> AffinityRule:
    polarity = AFFINITY if rng.random() < config.affinity_ratio else ANTI_AFFINITY
    value = rng.choice(cluster.value_domains[key])
    return AffinityRule(kind, polarity, strength, key, value)


def generate_app_spec(config: WorkloadConfig, cluster: ClusterState,
                      rng: random.Random, instance_id: str,
                      submit_slot: int = 0, role: str = NORMAL) -> AppSpec:
    """Generate one random application spec.

    Each node-label key yields a node rule with probability p_mn, each
    app-label key an inter-app rule with probability p_ma; when a pattern
    is configured it replaces the probabilistic rule generation.
    """
    config.validate()
    request = _draw_request(config, rng)
    lifetime = rng.randint(config.lifetime_min, config.lifetime_max)
    own_labels = _draw_own_labels(config, cluster, rng)
    if config.pattern is not None:
        rules = _patterned_rules(AffinityPattern.from_string(config.pattern),
                                 config, cluster, rng)
    else:
        rules = []
        for key in cluster.universe.node_keys:
            if rng.random() < config.p_mn:
                strength = REQUIRED if rng.random() < config.required_ratio else PREFERRED
                rules.append(_draw_rule(NODE, strength, key, cluster, config, rng))
        for key in cluster.universe.app_keys:
            if rng.random() < config.p_ma:
                strength = REQUIRED if rng.random() < config.required_ratio else PREFERRED
                rules.append(_draw_rule(APP, strength, key, cluster, config, rng))
    return AppSpec(instance_id, request, own_labels, rules, role=role,
                   submit_slot=submit_slot, lifetime_slots=lifetime)


def _patterned_rules(pattern: AffinityPattern, config, cluster, rng) -> list:
    node_keys = cluster.universe.node_keys
    app_keys = cluster.universe.app_keys
    for count, keys, what in (
        (pattern.req_node, node_keys, "required node"),
        (pattern.pref_node, node_keys, "preferred node"),
        (pattern.req_app, app_keys, "required inter-app"),
        (pattern.pref_app, app_keys, "preferred inter-app"),
    ):
        if count > len(keys):
            raise ConfigurationError(
                f"pattern asks for {count} {what} rules but only "
                f"{len(keys)} keys exist")
    rules = []
    for count, keys, kind, strength in (
        (pattern.req_node, node_keys, NODE, REQUIRED),
        (pattern.pref_node, node_keys, NODE, PREFERRED),
        (pattern.req_app, app_keys, APP, REQUIRED),
        (pattern.pref_app, app_keys, APP, PREFERRED),
    ):
        for key in rng.sample(list(keys), count):
            rules.append(_draw_rule(kind, strength, key, cluster, config, rng))
    return rules


def generate_app_spec_patterned(pattern: AffinityPattern, config: WorkloadConfig,
                                cluster: ClusterState, rng: random.Random,
                                instance_id: str, submit_slot: int = 0,
                                role: str = NORMAL) -> AppSpec:
    """Generate a spec with exactly the pattern's rule counts per category."""
    config.validate()
    request = _draw_request(config, rng)
    lifetime = rng.randint(config.lifetime_min, config.lifetime_max)
    own_labels = _draw_own_labels(config, cluster, rng)
    rules = _patterned_rules(pattern, config, cluster, rng)
    return AppSpec(instance_id, request, own_labels, rules, role=role,
                   submit_slot=submit_slot, lifetime_slots=lifetime)


class SamplingError(ValueError):
    """Raised when a victim sample exceeds the available population."""


def victim_sample(placed_normal_instances, count: int, rng: random.Random) -> list:
    """Uniform sample of victims, without replacement, from placed instances."""
    population = list(placed_normal_instances)
    if count > len(population):
        raise SamplingError(
            f"cannot sample {count} victims from {len(population)} instances")
    return rng.sample(population, count)
