"""Filter-score scheduling, plus the randomized-filter variant.

The filter phase drops nodes lacking free capacity or violating a required
rule; the score phase ranks survivors by least-requested resources plus
preference matches and places on the argmax. The mitigated filter skips each
required affinity check independently with probability p_s, letting some
violating nodes back into the candidate pool.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .cluster import ClusterState, allocate
from .workload import (AFFINITY, ANTI_AFFINITY, APP, NODE, PREFERRED,
                       REQUIRED, AppSpec)


@dataclass
class SchedulerConfig:
    # probability of skipping one required-affinity check per (node, rule)
    skip_probability: float = 0.0
    preferred_match_weight: float = 1.0
    preferred_anti_match_penalty: float = 1.0
    resource_score_weight: float = 1.0
    # labels whose required checks may be skipped; None means all of them
    skippable_labels: list = None

    def validate(self):
        if not 0.0 <= self.skip_probability <= 1.0:
            raise ValueError("skip_probability must be in [0, 1]")
        for name in ("preferred_match_weight", "preferred_anti_match_penalty",
                     "resource_score_weight"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass
class ScheduleDecision:
    instance_id: str
    placed: bool
    node_id: str = None
    candidate_count_after_filter: int = 0
    score_of_chosen: float = 0.0
    skipped_checks: int = 0
    # required rules violated on the chosen node (nonzero only via skips)
    violated_required: int = 0


def rule_satisfied(rule, node) -> bool:
    """Evaluate one affinity rule against one node's current state."""
    if rule.kind == NODE:
        has = node.labels.get(rule.label) == rule.value
    else:
        has = node.has_resident_label(rule.label, rule.value)
    return has if rule.polarity == AFFINITY else not has


def count_violated_required(spec: AppSpec, node) -> int:
    return sum(1 for r in spec.rules
               if r.strength == REQUIRED and not rule_satisfied(r, node))


def skip(p_s: float, rng: random.Random) -> bool:
    """True with probability p_s. Consumes no draw at p_s = 0."""
    return p_s > 0.0 and rng.random() < p_s


def filter_nodes(spec: AppSpec, cluster: ClusterState) -> list:
    """Nodes where the request fits and every required rule holds."""
    req = spec.request
    required = spec.required_rules()
    out = []
    for node in cluster.nodes:
        free = node.capacity - node.allocated
        if not req.fits_in(free):
            continue
        ok = True
        for rule in required:
            if not rule_satisfied(rule, node):
                ok = False
                break
        if ok:
            out.append(node.id)
    return out


def _filter_mitigated(spec, cluster, config, rng):
    """Mitigated filter; returns (candidate ids, skipped-check count)."""
    p_s = config.skip_probability
    skippable = config.skippable_labels
    req = spec.request
    required = spec.required_rules()
    out = []
    skipped = 0
    for node in cluster.nodes:
        free = node.capacity - node.allocated
        if not req.fits_in(free):
            continue
        ok = True
        for rule in required:
            if skippable is None or rule.label in skippable:
                if skip(p_s, rng):
                    skipped += 1
                    continue
            if not rule_satisfied(rule, node):
                ok = False
                break
        if ok:
            out.append(node.id)
    return out, skipped


def filter_mitigated(spec: AppSpec, cluster: ClusterState,
                     config: SchedulerConfig, rng: random.Random) -> list:
    """Like filter_nodes, but each required affinity check (never a resource
    check) is independently skipped with probability p_s per (node, rule)."""
    return _filter_mitigated(spec, cluster, config, rng)[0]


def node_score(spec: AppSpec, node, config: SchedulerConfig) -> float:
    """Least-requested resource score plus preference match terms."""
    cap = node.capacity
    free = cap - node.allocated
    req = spec.request
    resource = (
        (free.cpu - req.cpu) / cap.cpu
        + (free.memory - req.memory) / cap.memory
        + (free.disk - req.disk) / cap.disk
        + (free.ports - req.ports) / cap.ports
    ) / 4.0
    score = config.resource_score_weight * resource
    for rule in spec.rules:
        if rule.strength != PREFERRED:
            continue
        satisfied = rule_satisfied(rule, node)
        if rule.polarity == AFFINITY:
            if satisfied:
                score += config.preferred_match_weight
        else:
            if not satisfied:
                score -= config.preferred_anti_match_penalty
    return score


def score(spec: AppSpec, candidates: list, cluster: ClusterState,
          config: SchedulerConfig, rng: random.Random) -> str:
    """Pick the argmax-score candidate, ties broken uniformly."""
    if not candidates:
        raise ValueError("score requires a non-empty candidate list")
    best = None
    tied = []
    for node_id in candidates:
        s = node_score(spec, cluster.node(node_id), config)
        if best is None or s > best:
            best = s
            tied = [node_id]
        elif s == best:
            tied.append(node_id)
    return tied[0] if len(tied) == 1 else rng.choice(tied)


def schedule(spec: AppSpec, cluster: ClusterState, config: SchedulerConfig,
             rng: random.Random) -> ScheduleDecision:
    """Filter, score and allocate one spec; mutates the cluster on placement."""
    if config.skip_probability > 0.0:
        candidates, skipped = _filter_mitigated(spec, cluster, config, rng)
    else:
        candidates, skipped = filter_nodes(spec, cluster), 0
    if not candidates:
        return ScheduleDecision(spec.instance_id, placed=False,
                                candidate_count_after_filter=0,
                                skipped_checks=skipped)
    chosen = score(spec, candidates, cluster, config, rng)
    node = cluster.node(chosen)
    chosen_score = node_score(spec, node, config)
    # evaluate violations before allocating, so the instance's own labels
    # do not feed back into its inter-app checks
    violated = count_violated_required(spec, node)
    allocate(cluster, chosen, spec.instance_id, spec.request, spec.own_labels)
    return ScheduleDecision(
        spec.instance_id, placed=True, node_id=chosen,
        candidate_count_after_filter=len(candidates),
        score_of_chosen=chosen_score, skipped_checks=skipped,
        violated_required=violated)
