"""Render result figures next to the CSV output."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_METRICS = ("colocation_rate", "affinity_satisfaction", "mean_violated_specs",
            "rejection_rate")


def render_run_figure(result_dict: dict, out_dir: str) -> list:
    """Bar chart of the headline metrics for a single run."""
    os.makedirs(out_dir, exist_ok=True)
    names = [m for m in _METRICS if result_dict.get(m) is not None]
    values = [result_dict[m] for m in names]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(range(len(names)), values, color="#4878d0")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels([n.replace("_", "\n") for n in names], fontsize=8)
    ax.set_ylabel("value")
    ax.set_title("run metrics")
    fig.tight_layout()
    path = os.path.join(out_dir, "metrics.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def render_sweep_figures(rows: list, grid_names: list, out_dir: str) -> list:
    """One figure per metric: metric vs the first grid parameter, one line
    per combination of the remaining grid parameters."""
    os.makedirs(out_dir, exist_ok=True)
    if not rows:
        return []
    paths = []
    x_name = grid_names[0] if grid_names else None
    group_names = grid_names[1:]
    for metric in _METRICS:
        if all(row.get(metric) is None for row in rows):
            continue
        fig, ax = plt.subplots(figsize=(6, 4))
        if x_name is None:
            ax.bar([0], [rows[0].get(metric) or 0.0])
            ax.set_xticks([0])
            ax.set_xticklabels(["run"])
        else:
            groups = {}
            for row in rows:
                key = tuple((g, row[g]) for g in group_names)
                groups.setdefault(key, []).append(row)
            for key, group_rows in groups.items():
                xs = [r[x_name] for r in group_rows]
                ys = [r.get(metric) for r in group_rows]
                label = ", ".join(f"{g}={v}" for g, v in key) or None
                ax.plot(xs, ys, marker="o", label=label)
            ax.set_xlabel(x_name)
            if group_names:
                ax.legend(fontsize=8)
        ax.set_ylabel(metric)
        ax.set_title(metric.replace("_", " "))
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = os.path.join(out_dir, f"{metric}.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
