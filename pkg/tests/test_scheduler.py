"""Scheduler: filter/score oracles, tie-breaking, randomized filter."""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from colosim.cluster import ResourceVector
from colosim.scheduler import (SchedulerConfig, count_violated_required,
                               filter_mitigated, filter_nodes, node_score,
                               rule_satisfied, schedule, score, skip)
from colosim.workload import (AFFINITY, ANTI_AFFINITY, APP, NODE, PREFERRED,
                              REQUIRED, AffinityRule)

from conftest import (make_cluster, make_node, make_spec, random_small_cluster,
                      random_spec, rule)


# -- independent oracles ----------------------------------------------------

def oracle_rule(r, node):
    if r.kind == NODE:
        present = node.labels.get(r.label) == r.value
    else:
        present = any(labels.get(r.label) == r.value
                      for labels in node.resident_labels.values())
    return present if r.polarity == AFFINITY else not present


def oracle_filter(spec, cluster):
    out = []
    for node in cluster.nodes:
        if not spec.request.fits_in(node.capacity - node.allocated):
            continue
        if all(oracle_rule(r, node) for r in spec.rules
               if r.strength == REQUIRED):
            out.append(node.id)
    return out


def oracle_score(spec, node, config):
    free = node.capacity - node.allocated
    dims = [
        (free.cpu - spec.request.cpu) / node.capacity.cpu,
        (free.memory - spec.request.memory) / node.capacity.memory,
        (free.disk - spec.request.disk) / node.capacity.disk,
        (free.ports - spec.request.ports) / node.capacity.ports,
    ]
    total = config.resource_score_weight * sum(dims) / 4
    for r in spec.rules:
        if r.strength != PREFERRED:
            continue
        if r.polarity == AFFINITY and oracle_rule(r, node):
            total += config.preferred_match_weight
        if r.polarity == ANTI_AFFINITY and not oracle_rule(r, node):
            total -= config.preferred_anti_match_penalty
    return total


class TestRuleSatisfied:
    def test_node_rules(self):
        node = make_node("n0", labels={"cpu_type": "cpu_type-1"})
        match = rule(value="cpu_type-1")
        miss = rule(value="cpu_type-2")
        assert rule_satisfied(match, node)
        assert not rule_satisfied(miss, node)
        assert not rule_satisfied(
            rule(polarity=ANTI_AFFINITY, value="cpu_type-1"), node)
        assert rule_satisfied(
            rule(polarity=ANTI_AFFINITY, value="cpu_type-2"), node)

    def test_missing_node_label(self):
        node = make_node("n0", labels={})
        assert not rule_satisfied(rule(), node)
        assert rule_satisfied(rule(polarity=ANTI_AFFINITY), node)

    def test_app_rules(self):
        node = make_node("n0")
        node._add_resident("r1", ResourceVector.zero(), {"tier": "tier-0"})
        hit = rule(kind=APP, label="tier", value="tier-0")
        miss = rule(kind=APP, label="tier", value="tier-1")
        assert rule_satisfied(hit, node)
        assert not rule_satisfied(miss, node)
        assert not rule_satisfied(
            rule(kind=APP, polarity=ANTI_AFFINITY, label="tier",
                 value="tier-0"), node)


class TestFilter:
    def test_capacity_excludes(self):
        cluster = make_cluster([make_node("n0", (1, 1, 1, 1)),
                                make_node("n1", (8, 8, 8, 8))])
        spec = make_spec(request=(2, 1, 1, 1))
        assert filter_nodes(spec, cluster) == ["n1"]

    def test_required_rule_excludes(self):
        cluster = make_cluster([
            make_node("n0", labels={"cpu_type": "cpu_type-0"}),
            make_node("n1", labels={"cpu_type": "cpu_type-1"}),
        ])
        spec = make_spec(rules=[rule(value="cpu_type-0")])
        assert filter_nodes(spec, cluster) == ["n0"]

    def test_preferred_rules_do_not_exclude(self):
        cluster = make_cluster([
            make_node("n0", labels={"cpu_type": "cpu_type-0"}),
            make_node("n1", labels={"cpu_type": "cpu_type-1"}),
        ])
        spec = make_spec(rules=[rule(strength=PREFERRED, value="cpu_type-0")])
        assert filter_nodes(spec, cluster) == ["n0", "n1"]

    def test_matches_oracle_on_random_instances(self):
        rng = random.Random(99)
        for _ in range(300):
            cluster = random_small_cluster(rng)
            spec = random_spec(rng)
            assert filter_nodes(spec, cluster) == oracle_filter(spec, cluster)

    def test_count_violated_required(self):
        node = make_node("n0", labels={"cpu_type": "cpu_type-0"})
        spec = make_spec(rules=[
            rule(value="cpu_type-0"),                  # satisfied
            rule(value="cpu_type-1"),                  # violated
            rule(strength=PREFERRED, value="cpu_type-2"),  # preferred: ignored
            rule(kind=APP, label="tier", value="tier-0"),  # violated (no residents)
        ])
        assert count_violated_required(spec, node) == 2


class TestScore:
    def test_matches_oracle(self):
        rng = random.Random(7)
        config = SchedulerConfig(preferred_match_weight=0.5,
                                 preferred_anti_match_penalty=0.25,
                                 resource_score_weight=2.0)
        for _ in range(300):
            cluster = random_small_cluster(rng)
            spec = random_spec(rng)
            for node in cluster.nodes:
                got = node_score(spec, node, config)
                assert got == pytest.approx(oracle_score(spec, node, config))

    def test_emptier_node_wins(self):
        cluster = make_cluster([make_node("n0", (8, 8, 8, 8)),
                                make_node("n1", (8, 8, 8, 8))])
        cluster.node("n0").allocated = ResourceVector(4, 4, 4, 4)
        spec = make_spec()
        chosen = score(spec, ["n0", "n1"], cluster, SchedulerConfig(),
                       random.Random(0))
        assert chosen == "n1"

    def test_preferred_match_beats_resources(self):
        cluster = make_cluster([
            make_node("n0", (8, 8, 8, 8), labels={"cpu_type": "cpu_type-0"}),
            make_node("n1", (64, 64, 64, 64)),
        ])
        spec = make_spec(rules=[rule(strength=PREFERRED, value="cpu_type-0")])
        chosen = score(spec, ["n0", "n1"], cluster,
                       SchedulerConfig(preferred_match_weight=5.0),
                       random.Random(0))
        assert chosen == "n0"

    def test_anti_match_penalty_subtracts(self):
        cluster = make_cluster([
            make_node("n0", (8, 8, 8, 8), labels={"cpu_type": "cpu_type-0"}),
            make_node("n1", (8, 8, 8, 8), labels={"cpu_type": "cpu_type-1"}),
        ])
        spec = make_spec(rules=[rule(polarity=ANTI_AFFINITY,
                                     strength=PREFERRED, value="cpu_type-0")])
        chosen = score(spec, ["n0", "n1"], cluster,
                       SchedulerConfig(preferred_anti_match_penalty=5.0),
                       random.Random(0))
        assert chosen == "n1"

    def test_argmax_against_brute_force(self):
        rng = random.Random(21)
        config = SchedulerConfig()
        for _ in range(200):
            cluster = random_small_cluster(rng)
            spec = random_spec(rng)
            candidates = [n.id for n in cluster.nodes]
            best = max(oracle_score(spec, n, config) for n in cluster.nodes)
            chosen = score(spec, candidates, cluster, config, rng)
            got = oracle_score(spec, cluster.node(chosen), config)
            assert got == pytest.approx(best)

    def test_tie_break_is_uniform(self):
        cluster = make_cluster([make_node("n0"), make_node("n1")])
        spec = make_spec()
        rng = random.Random(17)
        trials = 10000
        wins = sum(score(spec, ["n0", "n1"], cluster, SchedulerConfig(),
                         rng) == "n0" for _ in range(trials))
        assert 0.48 <= wins / trials <= 0.52

    def test_empty_candidates_raise(self):
        cluster = make_cluster([make_node("n0")])
        with pytest.raises(ValueError):
            score(make_spec(), [], cluster, SchedulerConfig(), random.Random(0))

    @given(st.floats(min_value=0.1, max_value=10.0), st.integers(0, 10 ** 6))
    @settings(max_examples=50, deadline=None)
    def test_positive_weight_scaling_keeps_argmax(self, factor, seed):
        rng = random.Random(seed)
        cluster = random_small_cluster(rng, max_nodes=8)
        spec = random_spec(rng)
        base = SchedulerConfig()
        scaled = SchedulerConfig(
            preferred_match_weight=base.preferred_match_weight * factor,
            preferred_anti_match_penalty=(
                base.preferred_anti_match_penalty * factor),
            resource_score_weight=base.resource_score_weight * factor)
        candidates = [n.id for n in cluster.nodes]
        base_scores = [node_score(spec, n, base) for n in cluster.nodes]
        top = max(base_scores)
        if sum(1 for s in base_scores if s == pytest.approx(top)) > 1:
            return  # ties resolve randomly; the invariant is about the argmax
        a = score(spec, candidates, cluster, base, random.Random(0))
        b = score(spec, candidates, cluster, scaled, random.Random(0))
        assert a == b


class TestSkip:
    def test_zero_probability_consumes_no_draw(self):
        rng = random.Random(42)
        before = rng.getstate()
        assert skip(0.0, rng) is False
        assert rng.getstate() == before

    def test_certain(self):
        rng = random.Random(42)
        assert all(skip(1.0, rng) for _ in range(100))

    @pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
    def test_frequency(self, p):
        rng = random.Random(int(p * 100))
        n = 10000
        hits = sum(skip(p, rng) for _ in range(n))
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(hits - n * p) <= 3 * sigma


class TestFilterMitigated:
    def two_node_cluster(self):
        return make_cluster([
            make_node("n0", labels={"cpu_type": "cpu_type-0"}),
            make_node("n1", labels={"cpu_type": "cpu_type-1"}),
        ])

    def test_zero_skip_equals_plain_filter(self):
        rng = random.Random(13)
        for _ in range(200):
            cluster = random_small_cluster(rng)
            spec = random_spec(rng)
            config = SchedulerConfig(skip_probability=0.0)
            assert (filter_mitigated(spec, cluster, config, rng)
                    == filter_nodes(spec, cluster))

    def test_certain_skip_reduces_to_capacity_filter(self):
        cluster = self.two_node_cluster()
        spec = make_spec(rules=[rule(value="cpu_type-0")])
        config = SchedulerConfig(skip_probability=1.0)
        got = filter_mitigated(spec, cluster, config, random.Random(0))
        assert got == ["n0", "n1"]

    def test_resource_checks_never_skipped(self):
        cluster = make_cluster([make_node("n0", (1, 1, 1, 1))])
        spec = make_spec(request=(2, 2, 2, 2))
        config = SchedulerConfig(skip_probability=1.0)
        assert filter_mitigated(spec, cluster, config, random.Random(0)) == []

    def test_plain_candidates_always_survive(self):
        # skipping checks can only admit nodes, never evict compliant ones
        rng = random.Random(31)
        for _ in range(200):
            cluster = random_small_cluster(rng)
            spec = random_spec(rng)
            config = SchedulerConfig(skip_probability=rng.random())
            mitigated = set(filter_mitigated(spec, cluster, config, rng))
            assert set(filter_nodes(spec, cluster)) <= mitigated

    def test_extra_candidates_violate_something(self):
        rng = random.Random(37)
        for _ in range(200):
            cluster = random_small_cluster(rng)
            spec = random_spec(rng)
            config = SchedulerConfig(skip_probability=0.5)
            plain = set(filter_nodes(spec, cluster))
            for node_id in filter_mitigated(spec, cluster, config, rng):
                if node_id not in plain:
                    assert count_violated_required(
                        spec, cluster.node(node_id)) > 0

    def test_skippable_labels_allowlist(self):
        cluster = self.two_node_cluster()
        spec = make_spec(rules=[rule(value="cpu_type-0")])
        config = SchedulerConfig(skip_probability=1.0, skippable_labels=["region"])
        # cpu_type is not skippable, so the violating node stays out
        got = filter_mitigated(spec, cluster, config, random.Random(0))
        assert got == ["n0"]

    def test_skip_frequency_per_node_rule(self):
        # one always-violated rule over many nodes: admitted fraction ~ p_s
        nodes = [make_node(f"n{i}") for i in range(10000)]
        cluster = make_cluster(nodes)
        spec = make_spec(rules=[rule(value="cpu_type-0")])
        p = 0.3
        config = SchedulerConfig(skip_probability=p)
        admitted = len(filter_mitigated(spec, cluster, config, random.Random(2)))
        sigma = math.sqrt(10000 * p * (1 - p))
        assert abs(admitted - 10000 * p) <= 3 * sigma


class TestSchedule:
    def test_places_and_allocates(self):
        cluster = make_cluster([make_node("n0", (4, 4, 4, 4))])
        spec = make_spec(request=(2, 2, 2, 2), own_labels={"tier": "tier-0"})
        decision = schedule(spec, cluster, SchedulerConfig(), random.Random(0))
        assert decision.placed
        assert decision.node_id == "n0"
        assert decision.candidate_count_after_filter == 1
        assert decision.violated_required == 0
        node = cluster.node("n0")
        assert node.allocated == ResourceVector(2, 2, 2, 2)
        assert node.has_resident_label("tier", "tier-0")

    def test_rejection(self):
        cluster = make_cluster([make_node("n0", (1, 1, 1, 1))])
        spec = make_spec(request=(2, 2, 2, 2))
        decision = schedule(spec, cluster, SchedulerConfig(), random.Random(0))
        assert not decision.placed
        assert decision.node_id is None
        assert cluster.node("n0").allocated == ResourceVector.zero()

    def test_own_anti_affinity_does_not_self_violate(self):
        # an instance carrying label L with a required anti-affinity on L
        # must not count itself as a violation once placed
        cluster = make_cluster([make_node("n0")])
        spec = make_spec(own_labels={"tier": "tier-0"},
                         rules=[rule(kind=APP, polarity=ANTI_AFFINITY,
                                     label="tier", value="tier-0")])
        decision = schedule(spec, cluster, SchedulerConfig(), random.Random(0))
        assert decision.placed
        assert decision.violated_required == 0

    def test_violations_only_via_skips(self):
        rng = random.Random(8)
        for _ in range(100):
            cluster = random_small_cluster(rng)
            spec = random_spec(rng)
            decision = schedule(spec, cluster, SchedulerConfig(), rng)
            assert decision.violated_required == 0
            assert decision.skipped_checks == 0

    def test_skipped_placement_reports_violations(self):
        cluster = make_cluster([make_node("n0",
                                          labels={"cpu_type": "cpu_type-1"})])
        spec = make_spec(rules=[rule(value="cpu_type-0")])
        config = SchedulerConfig(skip_probability=1.0)
        decision = schedule(spec, cluster, config, random.Random(0))
        assert decision.placed
        assert decision.violated_required == 1
        assert decision.skipped_checks == 1

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SchedulerConfig(skip_probability=1.5).validate()
        with pytest.raises(ValueError):
            SchedulerConfig(preferred_match_weight=-1).validate()
