"""Figure rendering for experiment reports.

Every run that emits delimited output can also render the matching
matplotlib figures next to it (PNG, Agg backend, no display needed).
Figures are a convenience view of the CSVs; the CSVs remain the canonical
record.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diagnostics import KdeSummary

__all__ = [
    "render_det_histogram",
    "render_discrepancy_histogram",
    "render_kde",
    "render_value_scatter",
]

_SAVEFIG = {"dpi": 150, "bbox_inches": "tight"}


def render_det_histogram(dets: np.ndarray, path: str, title: str = "det Gamma") -> None:
    dets = np.asarray(dets, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    positive = dets[dets > 0.0]
    if positive.size and positive.size == dets.size and positive.max() / positive.min() > 1e3:
        ax.hist(np.log10(positive), bins=50, color="C0")
        ax.set_xlabel("log10 det")
    else:
        ax.hist(dets, bins=50, color="C0")
        ax.set_xlabel("det")
    ax.set_ylabel("paths")
    ax.set_title(title)
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def render_discrepancy_histogram(diffs: np.ndarray, path: str) -> None:
    diffs = np.asarray(diffs, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    floor = 1e-18
    ax.hist(np.log10(np.maximum(diffs, floor)), bins=50, color="C1")
    ax.set_xlabel("log10 relative engine/oracle discrepancy")
    ax.set_ylabel("paths")
    ax.set_title("engine vs oracle")
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def render_kde(summary: KdeSummary, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if summary.grid.ndim == 1:
        ax.plot(summary.grid, summary.density, color="C0")
        ax.set_xlabel("value")
        ax.set_ylabel("density")
    else:
        mesh = ax.pcolormesh(
            summary.grid[:, :, 0], summary.grid[:, :, 1], summary.density, shading="auto"
        )
        fig.colorbar(mesh, ax=ax, label="density")
        ax.set_xlabel("component 1")
        ax.set_ylabel("component 2")
    ax.set_title(f"kernel density ({summary.rule} bandwidth)")
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def render_value_scatter(values: np.ndarray, path: str) -> None:
    """Scatter (2-dim) or indexed strip (1-dim) of sampled functional values."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if arr.shape[1] >= 2:
        ax.scatter(arr[:, 0], arr[:, 1], s=4, alpha=0.5, color="C0")
        ax.set_xlabel("component 1")
        ax.set_ylabel("component 2")
    else:
        ax.scatter(np.arange(arr.shape[0]), arr[:, 0], s=4, alpha=0.5, color="C0")
        ax.set_xlabel("path")
        ax.set_ylabel("value")
    ax.set_title("sampled values")
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)
