"""Figures for the ablation report."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams.update(
    {
        "font.size": 9,
        "axes.labelsize": 9,
        "legend.fontsize": 8,
        "xtick.labelsize": 8,
        "ytick.labelsize": 8,
        "axes.spines.top": False,
        "axes.spines.right": False,
    }
)


def plot_ablation(rows: Sequence[dict], path: Path, dpi: int = 150) -> Path:
    """Bar chart of MIP size (log scale) for each optimization combination."""
    labels = [r["label"] for r in rows]
    xs = range(len(rows))
    width = 0.4
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    ax.bar([x - width / 2 for x in xs], [r["num_constraints"] for r in rows], width, label="constraints", color="#4c72b0")
    ax.bar([x + width / 2 for x in xs], [r["num_variables"] for r in rows], width, label="variables", color="#dd8452")
    ax.set_yscale("log")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("count")
    ax.set_xlabel("optimizations (G = group, P = prune, C = contract)")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return Path(path)
