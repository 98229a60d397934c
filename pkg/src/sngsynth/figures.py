"""Matplotlib rendering of the pipeline's figures.

Every figure the CLI emits also has a raw CSV next to it, so these plots are
conveniences, not the only record. SVG output is kept reproducible by fixing
the hash salt and dropping the date metadata.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "sngsynth"

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    path = str(path)
    metadata = {"Date": None} if path.endswith(".svg") else None
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata=metadata)
    plt.close(fig)


def render_loss_curve(loss_history, path, title: str = "Training loss") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(loss_history)), loss_history, lw=1.5)
    ax.set_xlabel("epoch")
    ax.set_ylabel("quantization loss")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    _save(fig, path)


def render_topology(points: np.ndarray, codebook: np.ndarray, path,
                    title: str = "Prototype fit") -> None:
    """Scatter overlay: target points (blue) vs prototype positions (red)."""
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(points[:, 0], points[:, 1], s=12, c="tab:blue",
               alpha=0.6, label="targets")
    ax.scatter(codebook[:, 0], codebook[:, 1], s=12, c="tab:red",
               marker="o", label="neurons")
    ax.set_aspect("equal")
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    _save(fig, path)


def render_report_chart(report, path) -> None:
    """Accuracy-by-regime bars with std error bars, plus confusion heatmaps."""
    names = list(report.regimes)
    n = len(names)
    fig, axes = plt.subplots(1, 1 + n, figsize=(4 + 3 * n, 3.5))
    axes = np.atleast_1d(axes)

    ax = axes[0]
    means = [report.regimes[r].mean_accuracy for r in names]
    stds = [report.regimes[r].std_accuracy for r in names]
    ax.bar(range(n), means, yerr=stds, capsize=4,
           color=["tab:blue", "tab:orange", "tab:green"][:n])
    ax.set_xticks(range(n))
    ax.set_xticklabels(names, rotation=20, ha="right", fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("accuracy")
    ax.set_title(f"test accuracy over {report.config.runs} run(s)")
    for x, m in enumerate(means):
        ax.text(x, m + 0.02, f"{m:.3f}", ha="center", fontsize=8)

    for j, regime in enumerate(names):
        ax = axes[1 + j]
        mat = report.regimes[regime].confusion_percent
        im = ax.imshow(mat, vmin=0, vmax=100, cmap="Blues")
        ax.set_title(f"{regime} confusion (%)", fontsize=9)
        ax.set_xlabel("predicted")
        ax.set_ylabel("true")
        ticks = range(len(report.class_names))
        ax.set_xticks(ticks)
        ax.set_yticks(ticks)
        ax.set_xticklabels(report.class_names, fontsize=7, rotation=45, ha="right")
        ax.set_yticklabels(report.class_names, fontsize=7)
        fig.colorbar(im, ax=ax, fraction=0.046)

    fig.tight_layout()
    _save(fig, path)
