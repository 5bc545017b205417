"""Command-line front end: run, sweep, attack-gen."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .attack import AttackConfig, repttack_specs
from .cluster import ConfigurationError
from .config import ExperimentConfig, load_config
from .experiment import (run_with_audit, sweep, write_audit_log,
                         write_results_csv)
from .manifest import (ManifestConfig, ParseError, manifest_to_yaml,
                       parse_pod_manifest, to_pod_manifest)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTERNAL = 3


def _resolve_seed(args, config: ExperimentConfig):
    if args.seed is not None:
        config.seed = args.seed
    elif os.environ.get("COLOSIM_SEED"):
        config.seed = int(os.environ["COLOSIM_SEED"])


def parse_grid_spec(spec: str) -> list:
    """Parse "attack.k=1..10;attack.spreading=true,false" into (path, values)
    pairs. Integer ranges use a..b, lists are comma separated."""
    grid = []
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        if "=" not in part:
            raise ConfigurationError(f"bad grid entry {part!r}: expected path=values")
        path, raw = part.split("=", 1)
        path = path.strip()
        raw = raw.strip()
        if ".." in raw and "," not in raw:
            lo, hi = raw.split("..", 1)
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [_coerce(v.strip()) for v in raw.split(",")]
        if not values:
            raise ConfigurationError(f"grid entry {part!r} has no values")
        grid.append((path, values))
    return grid


def _coerce(text: str):
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _write_summary(path: str, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_run(args) -> int:
    config = load_config(args.config)
    _resolve_seed(args, config)
    os.makedirs(args.out, exist_ok=True)
    result, audit = run_with_audit(config)
    row = result.to_dict()
    write_results_csv([row], [], os.path.join(args.out, "results.csv"))
    write_audit_log(audit, os.path.join(args.out, "audit.jsonl"))
    _write_summary(os.path.join(args.out, "summary.json"), row)
    if not args.no_plot:
        from .plots import render_run_figure

        render_run_figure(row, os.path.join(args.out, "figures"))
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    _resolve_seed(args, config)
    grid = parse_grid_spec(args.grid) if args.grid else []
    os.makedirs(args.out, exist_ok=True)
    rows = sweep(config, grid, jobs=args.jobs)
    grid_names = [path for path, _ in grid]
    write_results_csv(rows, grid_names, os.path.join(args.out, "results.csv"))
    _write_summary(os.path.join(args.out, "summary.json"),
                   {"grid": {p: v for p, v in grid}, "rows": len(rows),
                    "seed": config.seed})
    if not args.no_plot:
        from .plots import render_sweep_figures

        render_sweep_figures(rows, grid_names, os.path.join(args.out, "figures"))
    return EXIT_OK


def cmd_attack_gen(args) -> int:
    import random

    with open(args.victim) as fh:
        victim = parse_pod_manifest(fh.read())
    attack_cfg = AttackConfig(instance_count=args.k,
                              use_spreading_label=args.spread)
    seed = args.seed if args.seed is not None else int(
        os.environ.get("COLOSIM_SEED", "0"))
    specs = repttack_specs(victim, attack_cfg, random.Random(seed))
    manifest_dir = os.path.join(args.out, "manifests")
    os.makedirs(manifest_dir, exist_ok=True)
    manifest_cfg = ManifestConfig()
    for i, spec in enumerate(specs):
        doc = to_pod_manifest(spec, manifest_cfg)
        path = os.path.join(manifest_dir, f"attack-{i:03d}.yaml")
        with open(path, "w") as fh:
            fh.write(manifest_to_yaml(doc))
    return EXIT_OK


def _bool_flag(text: str) -> bool:
    if text.lower() in ("true", "1", "yes", "on"):
        return True
    if text.lower() in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colosim",
        description="Filter-score scheduler simulator: co-location attacks, "
                    "migration analysis, and randomized-filter mitigation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--no-plot", action="store_true",
                       help="skip figure rendering")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter grid")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--grid", default="",
                         help='e.g. "attack.k=1..10;attack.spreading=true,false"')
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--no-plot", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    p_gen = sub.add_parser("attack-gen",
                           help="generate attack manifests from a victim pod")
    p_gen.add_argument("--victim", required=True)
    p_gen.add_argument("--k", type=int, default=1)
    p_gen.add_argument("--spread", type=_bool_flag, default=True)
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_attack_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ParseError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except AssertionError as e:
        print(f"internal invariant violation: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
