"""Repttack: attack specs that replicate a victim's affinity rules.

Each attack instance copies the victim's affinity rules, requests the
minimum resources, and (when several instances are launched) carries a
private spreading label with a required inter-app anti-affinity on it so
the instances land on distinct nodes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .cluster import ClusterState, ConfigurationError, ResourceVector
from .workload import (ANTI_AFFINITY, APP, ATTACK, REQUIRED, AffinityRule,
                       AppSpec)

# when attack instances enter the queue, relative to the victim's placement
SAME_SLOT = "same-slot"
NEXT_SLOT = "next-slot"


@dataclass
class AttackConfig:
    instance_count: int = 1
    use_spreading_label: bool = True
    spreading_key: str = "spread"
    # None: a fresh random value is drawn per attack group
    spreading_value: str = None
    # per-rule probability of failing to replicate a victim rule
    replication_noise: float = 0.0
    # submission delay in slots after the victim's placement
    delay_slots: int = 1

    def validate(self):
        if self.instance_count < 1:
            raise ConfigurationError("instance_count must be >= 1")
        if not 0.0 <= self.replication_noise <= 1.0:
            raise ConfigurationError("replication_noise must be in [0, 1]")
        if self.delay_slots < 0:
            raise ConfigurationError("delay_slots must be >= 0")


def repttack_specs(victim: AppSpec, config: AttackConfig,
                   rng: random.Random) -> list:
    """Build the attack group for one victim: k specs with replicated rules."""
    config.validate()
    k = config.instance_count
    value = config.spreading_value
    if value is None:
        value = f"atk-{rng.randrange(10 ** 9):09d}"
    noise = config.replication_noise
    specs = []
    for i in range(k):
        rules = []
        for rule in victim.rules:
            if noise > 0.0 and rng.random() < noise:
                continue
            rules.append(rule)
        if config.use_spreading_label and k > 1:
            rules.append(AffinityRule(APP, ANTI_AFFINITY, REQUIRED,
                                      config.spreading_key, value))
        specs.append(AppSpec(
            instance_id=f"{victim.instance_id}/atk-{i}",
            request=ResourceVector.minimum(),
            own_labels={config.spreading_key: value},
            rules=rules,
            role=ATTACK,
            submit_slot=victim.submit_slot,
            lifetime_slots=victim.lifetime_slots,
        ))
    return specs


def is_colocated(victim_id: str, attack_ids, cluster: ClusterState) -> bool:
    """True iff some attack instance shares the victim's node right now."""
    node = cluster.node_of(victim_id)
    if node is None:
        return False
    return any(a in node.residents for a in attack_ids)
