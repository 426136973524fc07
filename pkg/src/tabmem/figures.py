"""File-output figure rendering for CLI reports.

Every renderer takes the already-computed report data and writes one PNG next
to the delimited output; nothing here feeds back into any metric.  The Agg
backend is forced so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .audit import CountHistogram
from .dynamics import GroupCurves


def save_ratio_histogram(ratios, tau: float, path: str | Path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(ratios, bins=40, range=(0.0, 1.0), color="#4878d0", edgecolor="white")
    ax.axvline(tau, color="#d65f5f", linestyle="--", label=f"tau = {tau:.4g}")
    ax.set_xlabel("distance ratio r")
    ax.set_ylabel("generated rows")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_count_tail(hist: CountHistogram, path: str | Path) -> Path:
    path = Path(path)
    ranks = [r for r, _ in hist.ranked]
    counts = [c for _, c in hist.ranked]
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    left.bar(list(hist.bins.keys()), list(hist.bins.values()), color="#4878d0")
    left.set_xlabel("attribution count")
    left.set_ylabel("training rows")
    right.plot(ranks, counts, color="#d65f5f")
    right.set_yscale("symlog")
    right.set_xlabel("rank")
    right.set_ylabel("attribution count")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_group_curves(curves: GroupCurves, path: str | Path) -> Path:
    path = Path(path)
    epochs = list(curves.epoch_indices)
    panels = [
        ("cum_frac_memorized", "cumulative fraction ever memorized"),
        ("forget_events", "forget events per epoch"),
        ("cum_forget_events", "cumulative forget events"),
        ("mean_mem_auc", "mean memorization intensity"),
    ]
    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    for ax, (key, title) in zip(axes.ravel(), panels):
        for group, style in (("top", "#d65f5f"), ("non_top", "#4878d0")):
            ax.plot(epochs, curves.groups[group][key], color=style, label=group)
        ax.set_title(title)
        ax.set_xlabel("epoch")
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_score_distribution(scores, threshold: float | None, path: str | Path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(scores, bins=40, color="#4878d0", edgecolor="white")
    if threshold is not None:
        ax.axvline(threshold, color="#d65f5f", linestyle="--", label="prune cut")
        ax.legend()
    ax.set_xlabel("memorization score")
    ax.set_ylabel("training rows")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_shape_bars(per_column: dict[str, float], path: str | Path) -> Path:
    path = Path(path)
    names = list(per_column)
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(names)), 4))
    ax.bar(names, [per_column[n] for n in names], color="#4878d0")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("shape score")
    ax.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
