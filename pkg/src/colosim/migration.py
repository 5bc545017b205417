"""Per-slot probabilistic instance migration and lifetime-overlap accounting.

With migration enabled an attack only counts as successful when the victim
is co-located with an attack instance for more than a threshold fraction of
its observed lifetime.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .attack import is_colocated
from .cluster import ClusterState, ConfigurationError, allocate, release
from .scheduler import filter_nodes

SHORTLIST = "shortlist"
CLUSTER_WIDE = "cluster-wide"


@dataclass
class MigrationConfig:
    probability: float = 0.0
    destination: str = SHORTLIST
    # percentage of the victim's lifetime that must be co-located
    success_threshold: float = 80.0
    allow_self_migration: bool = True

    def validate(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ConfigurationError("migration probability must be in [0, 1]")
        if self.destination not in (SHORTLIST, CLUSTER_WIDE):
            raise ConfigurationError(
                f"destination must be {SHORTLIST!r} or {CLUSTER_WIDE!r}")
        if not 0.0 < self.success_threshold <= 100.0:
            raise ConfigurationError("success_threshold must be in (0, 100]")


@dataclass
class OverlapEntry:
    slots_alive: int = 0
    slots_colocated: int = 0


def migrate_step(cluster: ClusterState, placements: dict, specs: dict,
                 config: MigrationConfig, rng: random.Random) -> list:
    """Run one slot's migrations; mutates cluster and placements in place.

    placements maps instance id -> node id in placement order; specs maps
    instance id -> AppSpec. One rng draw is consumed per placed instance even
    at probability 0, so enabling migration never shifts unrelated draws on
    this stream. Returns a list of (instance_id, source, destination) moves.
    """
    config.validate()
    moves = []
    for instance_id in list(placements):
        roll = rng.random()
        if roll >= config.probability:
            continue
        spec = specs[instance_id]
        source = placements[instance_id]
        release(cluster, source, instance_id)
        if config.destination == SHORTLIST:
            candidates = filter_nodes(spec, cluster)
        else:
            candidates = [n.id for n in cluster.nodes
                          if spec.request.fits_in(n.capacity - n.allocated)]
        if not config.allow_self_migration and len(candidates) > 1:
            candidates = [c for c in candidates if c != source]
        if candidates:
            dest = rng.choice(candidates)
        else:
            dest = source  # nowhere to go: stay put
        allocate(cluster, dest, instance_id, spec.request, spec.own_labels)
        placements[instance_id] = dest
        if dest != source:
            moves.append((instance_id, source, dest))
    return moves


def record_overlap(entry: OverlapEntry, victim_id: str, attack_ids,
                   cluster: ClusterState) -> OverlapEntry:
    """Account one slot of the victim's life, co-located or not."""
    entry.slots_alive += 1
    if is_colocated(victim_id, attack_ids, cluster):
        entry.slots_colocated += 1
    return entry


def lifetime_success(entry: OverlapEntry, threshold: float) -> bool:
    """Strictly more than threshold% of the victim's life co-located."""
    if entry.slots_alive <= 0:
        raise ValueError("lifetime_success needs at least one recorded slot")
    return entry.slots_colocated / entry.slots_alive > threshold / 100.0
