"""Slot-based execution driver, metrics, and parameter sweeps."""

from __future__ import annotations

import csv
import hashlib
import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .attack import is_colocated, repttack_specs
from .cluster import generate_cluster, release
from .config import ExperimentConfig, clone_config, set_path
from .migration import OverlapEntry, lifetime_success, migrate_step
from .scheduler import schedule
from .workload import NORMAL, VICTIM, generate_app_spec, victim_sample


def derive_seed(master_seed: int, name: str) -> int:
    """Stable sub-seed for an independent rng stream."""
    digest = hashlib.sha256(f"{master_seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class ExperimentResult:
    colocation_rate: float
    affinity_satisfaction: float
    mean_violated_specs: float
    attacks_total: int
    attacks_successful: int
    rejection_rate: float
    placed_count: int
    dropped_count: int
    submitted_count: int
    seed: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class _AttackGroup:
    victim_id: str
    attack_ids: list
    created_slot: int
    placed_colocated: bool = False
    voided: bool = False
    any_scheduled: bool = False
    entry: OverlapEntry = field(default_factory=OverlapEntry)


class _Runner:
    def __init__(self, config: ExperimentConfig):
        config.validate()
        self.config = config
        seed = config.seed
        self.rng_workload = random.Random(derive_seed(seed, "workload"))
        self.rng_sched = random.Random(derive_seed(seed, "scheduler"))
        self.rng_attack = random.Random(derive_seed(seed, "attack"))
        self.rng_victim = random.Random(derive_seed(seed, "victim"))
        self.rng_migration = random.Random(derive_seed(seed, "migration"))
        self.cluster = generate_cluster(config.cluster, derive_seed(seed, "cluster"))
        self.placements: dict = {}        # instance id -> node id, placement order
        self.specs: dict = {}             # instance id -> AppSpec
        self.expiries: dict = {}          # slot -> [instance id]
        self.pending: list = []           # [spec, attempts] carried to next slot
        self.due_attacks: dict = {}       # slot -> [spec]
        self.groups: list = []
        self.group_of: dict = {}          # attack instance id -> group
        self.victim_expiry: dict = {}     # victim id -> expiry slot
        self.victims: set = set()
        self.audit: list = []
        self.decisions: list = []         # placed-or-rejected audit subset
        self.next_instance = 0
        self.designated = 0

    # -- helpers ----------------------------------------------------------

    def _new_instance_id(self) -> str:
        self.next_instance += 1
        return f"app-{self.next_instance:06d}"

    def _expire(self, slot: int):
        for instance_id in self.expiries.pop(slot, ()):
            node_id = self.placements.pop(instance_id, None)
            if node_id is not None:
                release(self.cluster, node_id, instance_id)

    def _schedule_one(self, spec, attempts: int, slot: int):
        group = self.group_of.get(spec.instance_id)
        if group is not None:
            if group.victim_id not in self.placements:
                # victim already gone; a group never scheduled at all is void
                if not group.any_scheduled:
                    group.voided = True
                    self.audit.append({"type": "group_void", "slot": slot,
                                       "victim": group.victim_id})
                return
            group.any_scheduled = True
        decision = schedule(spec, self.cluster, self.config.scheduler,
                            self.rng_sched)
        record = {
            "type": "decision", "slot": slot, "instance": spec.instance_id,
            "role": spec.role, "attempt": attempts, "placed": decision.placed,
            "node": decision.node_id,
            "candidates": decision.candidate_count_after_filter,
            "skipped": decision.skipped_checks,
            "violated": decision.violated_required,
        }
        if group is not None:
            record["victim"] = group.victim_id
            if decision.placed:
                colocated = decision.node_id == self.placements.get(group.victim_id)
                record["colocated"] = colocated
                if colocated:
                    group.placed_colocated = True
        self.audit.append(record)
        if decision.placed:
            self.decisions.append(record)
            self.placements[spec.instance_id] = decision.node_id
            if group is None:
                expiry = slot + spec.lifetime_slots
                if spec.role in (NORMAL, VICTIM):
                    self.victim_expiry[spec.instance_id] = expiry
            else:
                expiry = self.victim_expiry[group.victim_id]
            if expiry > slot:
                self.expiries.setdefault(expiry, []).append(spec.instance_id)
        elif attempts < self.config.retry_limit:
            self.pending.append((spec, attempts + 1))
        else:
            self.decisions.append(record)
            record["dropped"] = True
            self.audit.append({"type": "drop", "slot": slot,
                               "instance": spec.instance_id, "role": spec.role})

    def _designate_victims(self, slot: int, placed_this_slot: list):
        cfg = self.config
        if cfg.victim_count <= 0:
            return
        target = round(cfg.victim_count * (slot + 1) / cfg.slots)
        deficit = target - self.designated
        if deficit <= 0:
            return
        eligible = [i for i in placed_this_slot
                    if self.specs[i].role == NORMAL and i not in self.victims]
        if not eligible:
            return
        count = min(deficit, len(eligible))
        chosen = victim_sample(eligible, count, self.rng_victim)
        for victim_id in chosen:
            self.designated += 1
            self.victims.add(victim_id)
            victim = self.specs[victim_id]
            victim.role = VICTIM
            attack_specs = repttack_specs(victim, cfg.attack, self.rng_attack)
            group = _AttackGroup(victim_id, [s.instance_id for s in attack_specs],
                                 created_slot=slot)
            self.groups.append(group)
            for spec in attack_specs:
                self.specs[spec.instance_id] = spec
                self.group_of[spec.instance_id] = group
            due = slot + cfg.attack.delay_slots
            if due < cfg.slots:
                self.due_attacks.setdefault(due, []).extend(attack_specs)
            self.audit.append({"type": "group", "slot": slot,
                               "victim": victim_id,
                               "attacks": group.attack_ids})

    # -- main loop --------------------------------------------------------

    def run(self) -> ExperimentResult:
        cfg = self.config
        for slot in range(cfg.slots):
            self._expire(slot)
            queue = self.pending
            self.pending = []
            before = set(self.placements)
            for _ in range(cfg.apps_per_slot):
                spec = generate_app_spec(cfg.workload, self.cluster,
                                         self.rng_workload,
                                         self._new_instance_id(),
                                         submit_slot=slot)
                self.specs[spec.instance_id] = spec
                queue.append((spec, 0))
            for spec in self.due_attacks.pop(slot, ()):
                queue.append((spec, 0))
            for spec, attempts in queue:
                self._schedule_one(spec, attempts, slot)
            placed_this_slot = [i for i in self.placements if i not in before]
            self._designate_victims(slot, placed_this_slot)
            if cfg.migration is not None:
                moves = migrate_step(self.cluster, self.placements, self.specs,
                                     cfg.migration, self.rng_migration)
                if moves:
                    self.audit.append({"type": "migration", "slot": slot,
                                       "moves": [list(m) for m in moves]})
            for group in self.groups:
                if not group.voided and group.victim_id in self.placements:
                    entry = group.entry
                    entry.slots_alive += 1
                    colocated = is_colocated(group.victim_id, group.attack_ids,
                                             self.cluster)
                    if colocated:
                        entry.slots_colocated += 1
                    self.audit.append({"type": "overlap", "slot": slot,
                                       "victim": group.victim_id,
                                       "colocated": colocated})
        return self._result()

    def _group_success(self, group: _AttackGroup) -> bool:
        if self.config.migration is not None:
            if group.entry.slots_alive <= 0:
                return False
            return lifetime_success(group.entry,
                                    self.config.migration.success_threshold)
        return group.placed_colocated

    def _result(self) -> ExperimentResult:
        counted = [g for g in self.groups if not g.voided]
        successes = sum(1 for g in counted if self._group_success(g))
        placed = [d for d in self.decisions if d["placed"]]
        dropped = [d for d in self.decisions if not d["placed"]]
        submitted = len(self.specs)
        return ExperimentResult(
            colocation_rate=(successes / len(counted)) if counted else None,
            affinity_satisfaction=(
                sum(1 for d in placed if d["violated"] == 0) / len(placed)
                if placed else None),
            mean_violated_specs=(
                sum(d["violated"] for d in placed) / len(placed)
                if placed else None),
            attacks_total=len(counted),
            attacks_successful=successes,
            rejection_rate=(len(dropped) / submitted) if submitted else 0.0,
            placed_count=len(placed),
            dropped_count=len(dropped),
            submitted_count=submitted,
            seed=self.config.seed,
        )


def run(config: ExperimentConfig) -> ExperimentResult:
    """Run one experiment; deterministic in (config, seed)."""
    return _Runner(config).run()


def run_with_audit(config: ExperimentConfig):
    """Run and also return the line-oriented audit records."""
    runner = _Runner(config)
    result = runner.run()
    return result, runner.audit


def recompute_metrics(audit: list, migration_enabled: bool,
                      success_threshold: float = 80.0) -> dict:
    """Rebuild the headline metrics from persisted audit records only."""
    groups = {}
    for rec in audit:
        if rec["type"] == "group":
            groups[rec["victim"]] = {
                "voided": False, "colocated": False, "alive": 0, "overlap": 0}
        elif rec["type"] == "group_void":
            groups[rec["victim"]]["voided"] = True
        elif rec["type"] == "overlap":
            g = groups[rec["victim"]]
            g["alive"] += 1
            if rec["colocated"]:
                g["overlap"] += 1
        elif rec["type"] == "decision" and rec.get("colocated"):
            groups[rec["victim"]]["colocated"] = True
    counted = [g for g in groups.values() if not g["voided"]]
    if migration_enabled:
        successes = sum(
            1 for g in counted
            if g["alive"] > 0 and g["overlap"] / g["alive"] > success_threshold / 100.0)
    else:
        successes = sum(1 for g in counted if g["colocated"])
    final = {}
    for rec in audit:
        if rec["type"] == "decision":
            if rec["placed"] or rec.get("dropped"):
                final[rec["instance"]] = rec
    placed = [d for d in final.values() if d["placed"]]
    dropped = [d for d in final.values() if not d["placed"]]
    submitted = set()
    for rec in audit:
        if rec["type"] == "decision":
            submitted.add(rec["instance"])
        elif rec["type"] == "group":
            submitted.update(rec["attacks"])
            submitted.add(rec["victim"])
    return {
        "colocation_rate": (successes / len(counted)) if counted else None,
        "affinity_satisfaction": (
            sum(1 for d in placed if d["violated"] == 0) / len(placed)
            if placed else None),
        "mean_violated_specs": (
            sum(d["violated"] for d in placed) / len(placed)
            if placed else None),
        "attacks_total": len(counted),
        "attacks_successful": successes,
    }


# -- sweeps ---------------------------------------------------------------

def _grid_points(grid: list) -> list:
    """Cartesian product of (path, values) pairs, in declaration order."""
    points = [[]]
    for path, values in grid:
        points = [p + [(path, v)] for p in points for v in values]
    return points


def _sweep_worker(args):
    index, config = args
    result = run(config)
    return index, result


def sweep(base_config: ExperimentConfig, grid: list, jobs: int = 1) -> list:
    """One run per grid point; returns long-format rows merged by index.

    grid is an ordered list of (parameter path, list of values). Each point
    gets an independent sub-seed derived from the master seed and its index,
    so serial and parallel execution produce identical tables.
    """
    points = _grid_points(grid)
    configs = []
    for index, assignments in enumerate(points):
        cfg = clone_config(base_config)
        for path, value in assignments:
            set_path(cfg, path, value)
        cfg.seed = derive_seed(base_config.seed, f"grid-{index}")
        cfg.validate()
        configs.append(cfg)
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(_sweep_worker, list(enumerate(configs))))
    else:
        results = dict(_sweep_worker(item) for item in enumerate(configs))
    rows = []
    for index, assignments in enumerate(points):
        row = {path: value for path, value in assignments}
        row.update(results[index].to_dict())
        rows.append(row)
    return rows


RESULT_COLUMNS = ("colocation_rate", "affinity_satisfaction",
                  "mean_violated_specs", "rejection_rate", "attacks_total",
                  "seed")


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_results_csv(rows: list, grid_names: list, path: str):
    """Stable long-format CSV: grid parameters first, then the metrics."""
    columns = list(grid_names) + list(RESULT_COLUMNS)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(c)) for c in columns])


def write_audit_log(audit: list, path: str):
    with open(path, "w") as fh:
        for record in audit:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_audit_log(path: str) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
