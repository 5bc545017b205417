"""Kubernetes-style pod manifest emission and parsing for app specs.

Only equality matching is supported: every rule maps to a single-value
In/NotIn match expression. Round-tripping an emitted manifest recovers the
original spec (modulo pod naming).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources as importlib_resources

import yaml

from .cluster import ResourceVector
from .workload import (AFFINITY, ANTI_AFFINITY, APP, NODE, NORMAL, PREFERRED,
                       REQUIRED, AffinityRule, AppSpec)

MEMORY_UNIT_MB = 512
DISK_UNIT_MB = 16

PORTS_RESOURCE = "colosim.dev/network-ports"
ROLE_ANNOTATION = "colosim.dev/role"
LIFETIME_ANNOTATION = "colosim.dev/lifetime-slots"
SUBMIT_ANNOTATION = "colosim.dev/submit-slot"

DEFAULT_IMAGES = ("traefik", "nginx", "tomcat", "redis", "mongo", "wordpress")


class ExportError(ValueError):
    """Raised when a spec cannot be represented as a pod manifest."""


class ParseError(ValueError):
    """Raised when a manifest uses constructs outside the supported subset."""


@dataclass
class ManifestConfig:
    topology_key: str = "kubernetes.io/hostname"
    preferred_weight: int = 50
    images: tuple = DEFAULT_IMAGES
    container_name: str = "main"


def _node_expression(rule: AffinityRule) -> dict:
    op = "In" if rule.polarity == AFFINITY else "NotIn"
    return {"key": rule.label, "operator": op, "values": [rule.value]}


def _pod_term(rule: AffinityRule, config: ManifestConfig) -> dict:
    return {
        "labelSelector": {"matchExpressions": [
            {"key": rule.label, "operator": "In", "values": [rule.value]}]},
        "topologyKey": config.topology_key,
    }


def to_pod_manifest(spec: AppSpec, config: ManifestConfig = None) -> dict:
    """Render one AppSpec as a pod manifest document (a plain dict)."""
    config = config or ManifestConfig()
    name = spec.instance_id.lower().replace("/", "-").replace("_", "-")
    if not name:
        raise ExportError("spec has an empty instance id")
    image = config.images[sum(name.encode()) % len(config.images)]
    requests = {
        "cpu": str(spec.request.cpu),
        "memory": f"{spec.request.memory * MEMORY_UNIT_MB}Mi",
        "ephemeral-storage": f"{spec.request.disk * DISK_UNIT_MB}Mi",
        PORTS_RESOURCE: str(spec.request.ports),
    }
    manifest = {
        "apiVersion": "v1",
        "kind": "Pod",
        "metadata": {
            "name": name,
            "labels": dict(spec.own_labels),
            "annotations": {
                ROLE_ANNOTATION: spec.role,
                LIFETIME_ANNOTATION: str(spec.lifetime_slots),
                SUBMIT_ANNOTATION: str(spec.submit_slot),
            },
        },
        "spec": {
            "containers": [{
                "name": config.container_name,
                "image": image,
                "resources": {"requests": requests},
            }],
        },
    }
    node_required = [r for r in spec.rules
                     if r.kind == NODE and r.strength == REQUIRED]
    node_preferred = [r for r in spec.rules
                      if r.kind == NODE and r.strength == PREFERRED]
    pod_rules = [r for r in spec.rules if r.kind == APP]
    affinity = {}
    if node_required or node_preferred:
        node_affinity = {}
        if node_required:
            node_affinity["requiredDuringSchedulingIgnoredDuringExecution"] = {
                "nodeSelectorTerms": [{
                    "matchExpressions": [_node_expression(r)
                                         for r in node_required]}],
            }
        if node_preferred:
            node_affinity["preferredDuringSchedulingIgnoredDuringExecution"] = [
                {"weight": config.preferred_weight,
                 "preference": {"matchExpressions": [_node_expression(r)]}}
                for r in node_preferred
            ]
        affinity["nodeAffinity"] = node_affinity
    for polarity, stanza in ((AFFINITY, "podAffinity"),
                             (ANTI_AFFINITY, "podAntiAffinity")):
        required = [r for r in pod_rules
                    if r.polarity == polarity and r.strength == REQUIRED]
        preferred = [r for r in pod_rules
                     if r.polarity == polarity and r.strength == PREFERRED]
        if not required and not preferred:
            continue
        block = {}
        if required:
            block["requiredDuringSchedulingIgnoredDuringExecution"] = [
                _pod_term(r, config) for r in required]
        if preferred:
            block["preferredDuringSchedulingIgnoredDuringExecution"] = [
                {"weight": config.preferred_weight,
                 "podAffinityTerm": _pod_term(r, config)} for r in preferred]
        affinity[stanza] = block
    if affinity:
        manifest["spec"]["affinity"] = affinity
    return manifest


def manifest_to_yaml(manifest: dict) -> str:
    return yaml.safe_dump(manifest, sort_keys=False)


def _parse_quantity(text: str, unit_mb: int, what: str) -> int:
    if not text.endswith("Mi"):
        raise ParseError(f"{what} request must be in Mi units, got {text!r}")
    mb = int(text[:-2])
    if mb % unit_mb:
        raise ParseError(f"{what} request {text!r} is not a multiple of "
                         f"{unit_mb}Mi")
    return mb // unit_mb


def _parse_expression(expr: dict, kind: str, strength: str,
                      polarity_by_op: bool) -> AffinityRule:
    op = expr.get("operator")
    values = expr.get("values", [])
    if op not in ("In", "NotIn"):
        raise ParseError(f"unsupported match operator {op!r}; only "
                         "single-value In/NotIn equality is supported")
    if len(values) != 1:
        raise ParseError(f"match expression for {expr.get('key')!r} must carry "
                         f"exactly one value, got {values!r}")
    if polarity_by_op:
        polarity = AFFINITY if op == "In" else ANTI_AFFINITY
    else:
        if op != "In":
            raise ParseError("pod affinity terms must use the In operator; "
                             "anti-affinity is expressed via podAntiAffinity")
        polarity = None  # caller supplies
    return AffinityRule(kind, polarity or AFFINITY, strength,
                        expr["key"], values[0])


def _parse_pod_terms(block: dict, polarity: str) -> list:
    rules = []
    for term in block.get("requiredDuringSchedulingIgnoredDuringExecution", []):
        rules.append(_parse_pod_term(term, polarity, REQUIRED))
    for item in block.get("preferredDuringSchedulingIgnoredDuringExecution", []):
        rules.append(_parse_pod_term(item["podAffinityTerm"], polarity,
                                     PREFERRED))
    return rules


def _parse_pod_term(term: dict, polarity: str, strength: str) -> AffinityRule:
    selector = term.get("labelSelector", {})
    if "matchLabels" in selector:
        raise ParseError("matchLabels selectors are not supported; use a "
                         "single-value In matchExpression")
    exprs = selector.get("matchExpressions", [])
    if len(exprs) != 1:
        raise ParseError("each pod affinity term must carry exactly one "
                         "match expression")
    rule = _parse_expression(exprs[0], APP, strength, polarity_by_op=False)
    return AffinityRule(APP, polarity, strength, rule.label, rule.value)


def parse_pod_manifest(document) -> AppSpec:
    """Inverse of to_pod_manifest on the supported manifest subset."""
    if isinstance(document, (str, bytes)):
        try:
            document = yaml.safe_load(document)
        except yaml.YAMLError as e:
            raise ParseError(f"not valid YAML: {e}") from None
    if not isinstance(document, dict):
        raise ParseError("manifest must be a YAML mapping")
    if document.get("kind") != "Pod":
        raise ParseError(f"unsupported kind {document.get('kind')!r}")
    metadata = document.get("metadata", {})
    pod_spec = document.get("spec", {})
    containers = pod_spec.get("containers", [])
    if len(containers) != 1:
        raise ParseError("manifest must describe exactly one container")
    requests = containers[0].get("resources", {}).get("requests", {})
    try:
        request = ResourceVector(
            int(requests["cpu"]),
            _parse_quantity(requests["memory"], MEMORY_UNIT_MB, "memory"),
            _parse_quantity(requests["ephemeral-storage"], DISK_UNIT_MB, "disk"),
            int(requests.get(PORTS_RESOURCE, 0)),
        )
    except KeyError as e:
        raise ParseError(f"missing resource request {e.args[0]!r}") from None
    annotations = metadata.get("annotations", {})
    rules = []
    affinity = pod_spec.get("affinity", {})
    unsupported = set(affinity) - {"nodeAffinity", "podAffinity",
                                   "podAntiAffinity"}
    if unsupported:
        raise ParseError(f"unsupported affinity stanzas: {sorted(unsupported)}")
    node_affinity = affinity.get("nodeAffinity", {})
    required = node_affinity.get("requiredDuringSchedulingIgnoredDuringExecution")
    if required:
        terms = required.get("nodeSelectorTerms", [])
        if len(terms) != 1:
            raise ParseError("exactly one nodeSelectorTerm is supported")
        for expr in terms[0].get("matchExpressions", []):
            rules.append(_parse_expression(expr, NODE, REQUIRED,
                                           polarity_by_op=True))
    for item in node_affinity.get(
            "preferredDuringSchedulingIgnoredDuringExecution", []):
        exprs = item.get("preference", {}).get("matchExpressions", [])
        if len(exprs) != 1:
            raise ParseError("each preferred node term must carry exactly one "
                             "match expression")
        rules.append(_parse_expression(exprs[0], NODE, PREFERRED,
                                       polarity_by_op=True))
    rules.extend(_parse_pod_terms(affinity.get("podAffinity", {}), AFFINITY))
    rules.extend(_parse_pod_terms(affinity.get("podAntiAffinity", {}),
                                  ANTI_AFFINITY))
    return AppSpec(
        instance_id=metadata.get("name", "pod"),
        request=request,
        own_labels=dict(metadata.get("labels", {})),
        rules=rules,
        role=annotations.get(ROLE_ANNOTATION, NORMAL),
        submit_slot=int(annotations.get(SUBMIT_ANNOTATION, 0)),
        lifetime_slots=int(annotations.get(LIFETIME_ANNOTATION, 1)),
    )


def load_pod_schema() -> dict:
    """The vendored pod-manifest schema used to validate emitted documents."""
    data = importlib_resources.files("colosim.data").joinpath(
        "pod_schema.json").read_text()
    return json.loads(data)


def validate_manifest(manifest: dict):
    """Validate an emitted manifest against the vendored schema fixture."""
    import jsonschema

    jsonschema.validate(manifest, load_pod_schema())
