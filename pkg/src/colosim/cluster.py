"""Cluster model: nodes, resources, labels, and random cluster generation."""

from __future__ import annotations

import random
from dataclasses import dataclass, field


class ConfigurationError(ValueError):
    """Raised for invalid generator or experiment configuration."""


class CapacityError(RuntimeError):
    """Raised when an allocation would exceed a node's capacity.

    The filter phase must make this impossible; seeing it means a scheduler bug.
    """


class NotFoundError(KeyError):
    """Raised when a node or instance id is unknown."""


@dataclass(frozen=True)
class ResourceVector:
    """Multi-dimensional resource quantity.

    memory is counted in units of 512 MB, disk in units of 16 MB.
    """

    cpu: int
    memory: int
    disk: int
    ports: int

    def __post_init__(self):
        if min(self.cpu, self.memory, self.disk, self.ports) < 0:
            raise ValueError("resource components must be non-negative")

    def fits_in(self, other: "ResourceVector") -> bool:
        return (
            self.cpu <= other.cpu
            and self.memory <= other.memory
            and self.disk <= other.disk
            and self.ports <= other.ports
        )

    def __add__(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(
            self.cpu + other.cpu,
            self.memory + other.memory,
            self.disk + other.disk,
            self.ports + other.ports,
        )

    def __sub__(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(
            self.cpu - other.cpu,
            self.memory - other.memory,
            self.disk - other.disk,
            self.ports - other.ports,
        )

    def as_tuple(self) -> tuple:
        return (self.cpu, self.memory, self.disk, self.ports)

    @classmethod
    def minimum(cls) -> "ResourceVector":
        """Smallest request an instance can make (one unit per dimension)."""
        return cls(1, 1, 1, 1)

    @classmethod
    def zero(cls) -> "ResourceVector":
        return cls(0, 0, 0, 0)


# A LabelMap is a plain dict: label key -> value. A missing key means the
# label is absent, which is allowed everywhere.
LabelMap = dict


class Node:
    """One physical machine: capacity, current allocation, labels, residents."""

    __slots__ = ("id", "capacity", "allocated", "labels", "residents",
                 "resident_labels", "_label_counts")

    def __init__(self, node_id: str, capacity: ResourceVector, labels: LabelMap):
        self.id = node_id
        self.capacity = capacity
        self.allocated = ResourceVector.zero()
        self.labels = dict(labels)
        # instance id -> its resource request
        self.residents: dict[str, ResourceVector] = {}
        # instance id -> its own labels (for inter-app affinity checks)
        self.resident_labels: dict[str, LabelMap] = {}
        # (key, value) -> number of residents carrying that pair
        self._label_counts: dict[tuple, int] = {}

    @property
    def free(self) -> ResourceVector:
        return self.capacity - self.allocated

    def has_resident_label(self, key: str, value: str) -> bool:
        return self._label_counts.get((key, value), 0) > 0

    def _add_resident(self, instance_id: str, request: ResourceVector,
                      labels: LabelMap):
        self.residents[instance_id] = request
        self.resident_labels[instance_id] = dict(labels)
        for pair in labels.items():
            self._label_counts[pair] = self._label_counts.get(pair, 0) + 1

    def _remove_resident(self, instance_id: str) -> ResourceVector:
        request = self.residents.pop(instance_id)
        labels = self.resident_labels.pop(instance_id)
        for pair in labels.items():
            n = self._label_counts[pair] - 1
            if n:
                self._label_counts[pair] = n
            else:
                del self._label_counts[pair]
        return request

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "capacity": self.capacity.as_tuple(),
            "allocated": self.allocated.as_tuple(),
            "labels": dict(self.labels),
            "residents": sorted(self.residents),
        }


@dataclass
class LabelUniverse:
    """The cluster's label keys: node keys, app keys, one reserved spreading key."""

    node_keys: list
    app_keys: list
    spreading_key: str

    def all_keys(self) -> list:
        return list(self.node_keys) + list(self.app_keys) + [self.spreading_key]


class ClusterState:
    """Ordered collection of nodes plus the label universe and value domains."""

    def __init__(self, nodes: list, universe: LabelUniverse, value_domains: dict):
        self.nodes = list(nodes)
        self.universe = universe
        self.value_domains = dict(value_domains)
        self._by_id = {n.id: n for n in self.nodes}
        if len(self._by_id) != len(self.nodes):
            raise ConfigurationError("duplicate node ids")

    def node(self, node_id: str) -> Node:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise NotFoundError(f"unknown node {node_id!r}") from None

    def node_of(self, instance_id: str):
        """Return the node hosting instance_id, or None if not placed."""
        for node in self.nodes:
            if instance_id in node.residents:
                return node
        return None

    def audit(self):
        """Walk every node and assert the allocation invariants."""
        for node in self.nodes:
            total = ResourceVector.zero()
            for request in node.residents.values():
                total = total + request
            assert total == node.allocated, (
                f"node {node.id}: allocated {node.allocated} != "
                f"sum of residents {total}")
            assert node.allocated.fits_in(node.capacity), (
                f"node {node.id}: allocated exceeds capacity")

    def snapshot(self) -> dict:
        return {"nodes": [n.snapshot() for n in self.nodes]}


@dataclass
class ClusterGenConfig:
    node_count: int = 100
    # per-key probability that a node carries a node label at all
    node_label_presence: float = 1.0
    node_label_keys: tuple = ("cpu_type", "gpu_type", "disk_type", "mem_class",
                              "region")
    app_label_keys: tuple = ("app_type", "tier", "team", "env", "framework")
    spreading_key: str = "spread"
    values_per_key: int = 3
    cpu_choices: tuple = (8, 16, 32, 64)
    memory_choices: tuple = (16, 32, 64, 128)
    disk_choices: tuple = (256, 512, 1024)
    ports_choices: tuple = (8, 16)


def _value_domains(config: ClusterGenConfig) -> dict:
    if config.values_per_key < 1:
        raise ConfigurationError("values_per_key must be >= 1")
    domains = {}
    for key in list(config.node_label_keys) + list(config.app_label_keys):
        domains[key] = [f"{key}-{i}" for i in range(config.values_per_key)]
    return domains


def generate_cluster(config: ClusterGenConfig, rng_seed: int) -> ClusterState:
    """Generate a random heterogeneous cluster, deterministic in (config, seed).

    The spreading key is reserved for attackers: nodes never carry it.
    """
    if config.node_count < 1:
        raise ConfigurationError("node_count must be >= 1")
    for name in ("cpu_choices", "memory_choices", "disk_choices", "ports_choices"):
        if not getattr(config, name):
            raise ConfigurationError(f"{name} must be non-empty")
    domains = _value_domains(config)
    rng = random.Random(rng_seed)
    nodes = []
    for i in range(config.node_count):
        capacity = ResourceVector(
            rng.choice(config.cpu_choices),
            rng.choice(config.memory_choices),
            rng.choice(config.disk_choices),
            rng.choice(config.ports_choices),
        )
        labels = {}
        for key in config.node_label_keys:
            if rng.random() < config.node_label_presence:
                labels[key] = rng.choice(domains[key])
        nodes.append(Node(f"node-{i:04d}", capacity, labels))
    universe = LabelUniverse(
        node_keys=list(config.node_label_keys),
        app_keys=list(config.app_label_keys),
        spreading_key=config.spreading_key,
    )
    return ClusterState(nodes, universe, domains)


def allocate(state: ClusterState, node_id: str, instance_id: str,
             request: ResourceVector, instance_labels: LabelMap = None):
    """Place an instance on a node, consuming its request."""
    node = state.node(node_id)
    if instance_id in node.residents:
        raise ConfigurationError(f"instance {instance_id!r} already on {node_id!r}")
    if not (node.allocated + request).fits_in(node.capacity):
        raise CapacityError(
            f"request {request.as_tuple()} does not fit on {node_id!r} "
            f"(free {node.free.as_tuple()})")
    node.allocated = node.allocated + request
    node._add_resident(instance_id, request, instance_labels or {})
    return state


def release(state: ClusterState, node_id: str, instance_id: str):
    """Remove an instance from a node, freeing its request."""
    node = state.node(node_id)
    if instance_id not in node.residents:
        raise NotFoundError(f"instance {instance_id!r} not on node {node_id!r}")
    request = node._remove_resident(instance_id)
    node.allocated = node.allocated - request
    return state
