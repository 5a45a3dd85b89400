"""Matplotlib figures written next to the CV report tables."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .evaluation import CVReport

# keeps PNG bytes identical across runs and matplotlib builds
_METADATA = {"Software": None}


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    FigureCanvasAgg(fig)
    fig.savefig(path, format="png", dpi=100, metadata=_METADATA)
    return path


def plot_cv_folds(report: CVReport, path, title: str | None = None) -> Path:
    """Bar charts of per-fold accuracy, block count and clause count with the mean marked."""
    fig = Figure(figsize=(10, 3.2))
    folds = np.arange(1, len(report.folds) + 1)
    panels = [("accuracy", "Accuracy %", "#1f77b4"),
              ("block_count", "Block count", "#ff7f0e"),
              ("clause_count", "Total clauses", "#2ca02c")]
    for i, (metric, label, color) in enumerate(panels):
        ax = fig.add_subplot(1, 3, i + 1)
        v = report.values(metric)
        ax.bar(folds, v, color=color, width=0.7)
        ax.axhline(v.mean(), color="k", lw=1, ls="--", label=f"mean {v.mean():.2f}")
        if metric == "accuracy":
            ax.set_ylim(max(0.0, v.min() - 5), 100.5)
        ax.set_xticks(folds)
        ax.set_xlabel("Fold")
        ax.set_ylabel(label)
        ax.legend(loc="lower right", fontsize=8, frameon=False)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_stage_counts(stages: list[dict], path, title: str | None = None) -> Path:
    """Block and clause counts after each pipeline stage (from a model's config snapshot)."""
    fig = Figure(figsize=(6, 3.2))
    ax1 = fig.add_subplot(1, 1, 1)
    names = [s["stage"] for s in stages]
    x = np.arange(len(names))
    ax1.plot(x, [s["block_count"] for s in stages], "o-", color="#ff7f0e", label="blocks")
    ax1.set_ylabel("Blocks")
    ax2 = ax1.twinx()
    ax2.plot(x, [s["clause_count"] for s in stages], "s--", color="#2ca02c", label="clauses")
    ax2.set_ylabel("Clauses")
    ax1.set_xticks(x)
    ax1.set_xticklabels(names)
    if title:
        ax1.set_title(title)
    fig.tight_layout()
    return _save(fig, path)
