"""Matplotlib renderings of the standard report artifacts.

Every helper writes a PNG next to the delimited data it visualizes and
returns the path. The Agg backend keeps rendering headless.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .graphs import SUMMARY_NAMES
from .testing import matrix_form

__all__ = [
    "edge_matrix_heatmap",
    "difference_heatmap",
    "predictive_violins",
    "probability_histograms",
]

_DPI = 150


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def edge_matrix_heatmap(values, v, path, title, vmin=0.0, vmax=1.0, cmap="viridis"):
    """Per-edge values re-arranged in matrix form."""
    m = matrix_form(values, v, fill=np.nan)
    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    im = ax.imshow(m, vmin=vmin, vmax=vmax, cmap=cmap, interpolation="nearest")
    ax.set_title(title)
    ax.set_xlabel("node")
    ax.set_ylabel("node")
    fig.colorbar(im, ax=ax, shrink=0.85)
    return _finish(fig, path)


def difference_heatmap(diff_values, v, path, title):
    scale = max(1e-6, float(np.nanmax(np.abs(diff_values))))
    return edge_matrix_heatmap(
        diff_values, v, path, title, vmin=-scale, vmax=scale, cmap="RdBu_r"
    )


def predictive_violins(pred_summaries, path):
    """Posterior-predictive summary statistics, one violin per group."""
    fig, axes = plt.subplots(1, len(SUMMARY_NAMES), figsize=(3.1 * len(SUMMARY_NAMES), 3.4))
    for j, (ax, name) in enumerate(zip(np.atleast_1d(axes), SUMMARY_NAMES)):
        data = [pred_summaries[:, y, j] for y in range(2)]
        data = [d[np.isfinite(d)] for d in data]
        if all(d.size > 1 for d in data):
            ax.violinplot(data, showmedians=True)
        ax.set_xticks([1, 2])
        ax.set_xticklabels(["group 1", "group 2"])
        ax.set_title(name.replace("_", " "))
    return _finish(fig, path)


def probability_histograms(prob_sets, path, title="posterior probability of the alternative"):
    """Histograms of per-replicate global probabilities, one panel per
    labelled set (e.g. scenario or sample size)."""
    n = len(prob_sets)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.0), squeeze=False)
    for ax, (label, probs) in zip(axes[0], prob_sets.items()):
        ax.hist(np.asarray(probs), bins=np.linspace(0, 1, 21), color="steelblue")
        ax.set_xlim(0, 1)
        ax.set_title(label, fontsize=10)
        ax.set_xlabel("probability")
    fig.suptitle(title, fontsize=11)
    return _finish(fig, path)
