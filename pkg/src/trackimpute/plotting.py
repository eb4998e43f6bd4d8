"""Figures for imputation runs: spaghetti plot of retained draws and the occupancy heatmap."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import LineCollection  # noqa: E402
from matplotlib.colors import LogNorm  # noqa: E402

from .core import Receiver, SegmentSpec, TrajectoryDraw  # noqa: E402
from .heatmap import HeatmapGrid  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}

MAX_LINES = 5000


def _km(ax):
    ax.set_xlabel("east (km)")
    ax.set_ylabel("north (km)")
    ax.set_aspect("equal")


def _draw_receivers(ax, receivers: Sequence[Receiver], specs: Sequence[SegmentSpec] = ()):
    if receivers:
        xy = np.array([[r.position.x, r.position.y] for r in receivers]) / 1000.0
        ax.scatter(xy[:, 0], xy[:, 1], s=8, c="0.6", marker="^", lw=0, label="receiver", zorder=3)
    used = []
    for s in specs:
        for r in (s.start_receiver, s.end_receiver):
            if r.id not in used:
                used.append(r.id)
                ax.scatter(r.position.x / 1000.0, r.position.y / 1000.0, s=30, marker="^",
                           edgecolor="k", lw=0.5, zorder=4, label=f"detected at {r.id}")


def plot_trajectories(
    draws: Sequence[TrajectoryDraw],
    path,
    receivers: Sequence[Receiver] = (),
    title: str | None = None,
) -> Path:
    """Overlay the retained draws; the best-scoring one is drawn on top with its daily points."""
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 5.0))
        lines = []
        for d in draws[:MAX_LINES]:
            pts = [p for seg in d.segments for p in seg.positions[:-1]] + [d.segments[-1].end]
            lines.append(np.array([[p.x, p.y] for p in pts]) / 1000.0)
        alpha = float(np.clip(20.0 / max(len(lines), 1), 0.02, 0.8))
        ax.add_collection(LineCollection(lines, colors="0.2", linewidths=0.4, alpha=alpha))
        if draws:
            best = lines[0]
            ax.plot(best[:, 0], best[:, 1], "-o", color="C3", ms=3, lw=1.0, label="most likely draw")
        _draw_receivers(ax, receivers, [s.spec for s in draws[0].segments] if draws else ())
        ax.autoscale()
        _km(ax)
        ax.legend(loc="best", frameon=False)
        ax.set_title(title or f"{len(draws)} retained trajectories")
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_heatmap(
    grid: HeatmapGrid,
    path,
    receivers: Sequence[Receiver] = (),
    title: str | None = None,
) -> Path:
    path = Path(path)
    x0, x1, y0, y1 = grid.extent
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 5.0))
        data = np.ma.masked_equal(grid.counts, 0)
        im = ax.imshow(data, origin="lower", extent=(x0 / 1e3, x1 / 1e3, y0 / 1e3, y1 / 1e3),
                       cmap="inferno_r", interpolation="nearest",
                       norm=LogNorm(vmin=1, vmax=max(2, grid.counts.max())))
        fig.colorbar(im, ax=ax, shrink=0.8, label="visits per cell")
        if receivers:
            xy = np.array([[r.position.x, r.position.y] for r in receivers]) / 1000.0
            inside = (xy[:, 0] >= x0 / 1e3) & (xy[:, 0] <= x1 / 1e3) & (xy[:, 1] >= y0 / 1e3) & (xy[:, 1] <= y1 / 1e3)
            ax.scatter(xy[inside, 0], xy[inside, 1], s=10, c="C0", marker="^", lw=0)
        _km(ax)
        ax.set_title(title or f"occupancy, {grid.cell_m:g} m cells")
        fig.savefig(path)
        plt.close(fig)
    return path
