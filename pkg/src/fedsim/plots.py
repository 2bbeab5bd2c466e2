"""Figure rendering for the CLI report paths.

Each renderer takes already-computed results and writes a PNG next to the
delimited output.  The CSV/JSON files remain the canonical artifacts; these
are conveniences for eyeballing runs.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_trace(records, path, metric_name: str = "eval_metric") -> None:
    """Training loss plus gradient-norm / eval curves for one run."""
    rounds = [r.t for r in records]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))
    axes[0].plot(rounds, [r.train_loss for r in records], lw=1)
    axes[0].set_xlabel("round")
    axes[0].set_ylabel("train loss")
    axes[0].set_yscale("log")
    pts = [(r.t, r.grad_norm_sq) for r in records if r.grad_norm_sq is not None]
    if pts:
        xs, ys = zip(*pts)
        positive = [y for y in ys if y > 0]
        axes[1].plot(xs, ys, lw=1, label="||grad f||^2")
        if positive and len(positive) == len(ys):
            axes[1].set_yscale("log")
    ev = [(r.t, r.eval_metric) for r in records if r.eval_metric is not None]
    if ev:
        xs, ys = zip(*ev)
        axes[1].plot(xs, ys, lw=1, ls="--", label=metric_name)
    axes[1].set_xlabel("round")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_sweep(result, path) -> None:
    """Heatmap of window scores over the lr grid (best tau per cell)."""
    etas_l = sorted({c.eta_l for c in result.table})
    etas = sorted({c.eta for c in result.table})
    grid = np.full((len(etas_l), len(etas)), np.nan)
    for cell in result.table:
        if cell.failed or cell.score is None:
            continue
        i, j = etas_l.index(cell.eta_l), etas.index(cell.eta)
        if np.isnan(grid[i, j]) or cell.score < grid[i, j]:
            grid[i, j] = cell.score
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(etas)), [f"{e:.3g}" for e in etas], rotation=45, fontsize=7)
    ax.set_yticks(range(len(etas_l)), [f"{e:.3g}" for e in etas_l], fontsize=7)
    ax.set_xlabel("server lr")
    ax.set_ylabel("client lr")
    best = result.best
    ax.scatter([etas.index(best.eta)], [etas_l.index(best.eta_l)],
               marker="*", s=160, c="red")
    fig.colorbar(im, ax=ax, label="window train loss")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_partition(assignments, labels, path) -> None:
    """Unique labels per client and aggregate label usage."""
    uniques = [len(np.unique(labels[idx])) for idx in assignments]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))
    axes[0].hist(uniques, bins=np.arange(0.5, max(uniques) + 1.5), color="steelblue")
    axes[0].set_xlabel("unique labels per client")
    axes[0].set_ylabel("clients")
    taken = np.concatenate(assignments)
    counts = np.bincount(labels[taken])
    axes[1].bar(range(counts.size), counts, width=1.0, color="gray")
    axes[1].set_xlabel("label")
    axes[1].set_ylabel("assigned examples")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_bounds(bound_report: dict, path) -> None:
    """Bar chart of the evaluated bound terms (log scale)."""
    items = [
        ("adagrad rhs (I)", bound_report["adagrad"]["rhs_i"]),
        ("adagrad rhs (I&II)", bound_report["adagrad"]["rhs_i_and_ii"]),
        ("adam rhs", bound_report["adam"]["rhs"]),
        ("corollary rate", bound_report["corollary_rate"]),
        ("drift bound", bound_report["drift_bound_at_start"]),
    ]
    emp = bound_report.get("empirical")
    if emp:
        items.append(("empirical min ||grad||^2", emp["min_grad_sq_mean"]))
    names, values = zip(*items)
    fig, ax = plt.subplots(figsize=(6.5, 3.6))
    colors = ["indianred" if "empirical" in n else "steelblue" for n in names]
    ax.bar(range(len(values)), values, color=colors)
    ax.set_xticks(range(len(names)), names, rotation=30, ha="right", fontsize=8)
    if all(v > 0 for v in values):
        ax.set_yscale("log")
    ax.set_ylabel("value")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
