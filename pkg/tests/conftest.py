"""Shared fixtures and hand-built cluster/spec helpers."""

import random

import pytest

from colosim.cluster import (ClusterState, LabelUniverse, Node,
                             ResourceVector)
from colosim.workload import (AFFINITY, ANTI_AFFINITY, APP, NODE, PREFERRED,
                              REQUIRED, AffinityRule, AppSpec)

NODE_KEYS = ["cpu_type", "region"]
APP_KEYS = ["app_type", "tier"]
SPREADING_KEY = "spread"


def make_node(node_id, capacity=(16, 32, 64, 8), labels=None):
    return Node(node_id, ResourceVector(*capacity), labels or {})


def make_cluster(nodes, node_keys=None, app_keys=None, values_per_key=3):
    node_keys = node_keys if node_keys is not None else NODE_KEYS
    app_keys = app_keys if app_keys is not None else APP_KEYS
    domains = {key: [f"{key}-{i}" for i in range(values_per_key)]
               for key in node_keys + app_keys}
    universe = LabelUniverse(node_keys=node_keys, app_keys=app_keys,
                             spreading_key=SPREADING_KEY)
    return ClusterState(nodes, universe, domains)


def make_spec(instance_id="app-1", request=(1, 1, 1, 1), own_labels=None,
              rules=None, **kwargs):
    return AppSpec(instance_id, ResourceVector(*request),
                   own_labels or {}, rules or [], **kwargs)


def rule(kind=NODE, polarity=AFFINITY, strength=REQUIRED,
         label="cpu_type", value="cpu_type-0"):
    return AffinityRule(kind, polarity, strength, label, value)


def random_small_cluster(rng, max_nodes=20):
    """A random cluster of at most max_nodes nodes with random labels
    and residents, for oracle comparisons."""
    n = rng.randint(1, max_nodes)
    nodes = []
    for i in range(n):
        capacity = ResourceVector(rng.randint(1, 16), rng.randint(1, 16),
                                  rng.randint(1, 16), rng.randint(1, 16))
        labels = {}
        for key in NODE_KEYS:
            if rng.random() < 0.8:
                labels[key] = f"{key}-{rng.randrange(3)}"
        node = Node(f"node-{i}", capacity, labels)
        nodes.append(node)
    cluster = make_cluster(nodes)
    # sprinkle residents so inter-app rules have something to match
    counter = 0
    for node in nodes:
        for _ in range(rng.randint(0, 3)):
            req = ResourceVector(rng.randint(0, 2), rng.randint(0, 2),
                                 rng.randint(0, 2), rng.randint(0, 2))
            if not (node.allocated + req).fits_in(node.capacity):
                continue
            labels = {}
            for key in APP_KEYS:
                if rng.random() < 0.6:
                    labels[key] = f"{key}-{rng.randrange(3)}"
            counter += 1
            node.allocated = node.allocated + req
            node._add_resident(f"res-{counter}", req, labels)
    return cluster


def random_rules(rng, count=None):
    rules = []
    n = rng.randint(0, 4) if count is None else count
    for _ in range(n):
        kind = rng.choice([NODE, APP])
        key = rng.choice(NODE_KEYS if kind == NODE else APP_KEYS)
        rules.append(AffinityRule(
            kind,
            rng.choice([AFFINITY, ANTI_AFFINITY]),
            rng.choice([REQUIRED, PREFERRED]),
            key,
            f"{key}-{rng.randrange(3)}",
        ))
    return rules


def random_spec(rng, instance_id="probe"):
    request = ResourceVector(rng.randint(0, 4), rng.randint(0, 4),
                             rng.randint(0, 4), rng.randint(0, 4))
    own_labels = {}
    for key in APP_KEYS:
        if rng.random() < 0.5:
            own_labels[key] = f"{key}-{rng.randrange(3)}"
    return AppSpec(instance_id, request, own_labels, random_rules(rng))


@pytest.fixture
def rng():
    return random.Random(12345)
