"""Matplotlib figures for cell sets, node inventories and bifurcation sweeps.

Figures are written with the non-interactive Agg backend and fixed metadata,
so the same input always yields the same PNG bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402

from .chaingraph import ChainGraph, Which  # noqa: E402
from .chaosgame import Sweep  # noqa: E402
from .grid import GridSet  # noqa: E402

STYLE = {
    "figure.dpi": 100,
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
PNG_META = {"Software": None}
NODE_COLORS = {"strong_node": "#1f5fa8", "weak_node": "#e08a1e"}


def _extent(grid) -> list[float]:
    lo, hi = grid.domain.lo, grid.domain.hi
    return [lo[0], hi[0], lo[1], hi[1]]


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="png", metadata=PNG_META)
    plt.close(fig)
    return path


def plot_set(s: GridSet, path, title: str = "") -> Path:
    """Raster of a 2D set (black on white), or its cell spans for a 1D set."""
    grid = s.grid
    with plt.rc_context(STYLE):
        if grid.dim == 1:
            fig, ax = plt.subplots(figsize=(6, 1.6))
            x0, w = grid.lo[0], grid.widths[0]
            bits = s.bits.astype(np.int8)
            edges = np.flatnonzero(np.diff(np.concatenate([[0], bits, [0]])))
            for a, b in zip(edges[::2], edges[1::2]):
                ax.axvspan(x0 + a * w, x0 + b * w, ymin=0.3, ymax=0.7, color="black", lw=0)
            ax.set_xlim(grid.domain.lo[0], grid.domain.hi[0])
            ax.set_yticks([])
            ax.set_xlabel("x")
        else:
            fig, ax = plt.subplots(figsize=(5, 5))
            cmap = ListedColormap(["white", "#dddddd", "black"])
            code = np.where(s.as_array(), 2, np.where(grid.mask.reshape(grid.shape), 0, 1))
            ax.imshow(code, origin="lower", extent=_extent(grid), cmap=cmap, vmin=0, vmax=2,
                      interpolation="nearest")
            ax.set_aspect("equal")
            ax.set_xlabel("x")
            ax.set_ylabel("y")
        ax.set_title(title or f"{len(s)} cells")
        fig.tight_layout()
        return _save(fig, path)


def plot_nodes(cg: ChainGraph, path, which: Which = "weak", title: str = "") -> Path:
    """Cells of every node of the requested class, colored by node id."""
    grid = cg.grid
    ids = cg.nodes(which)
    with plt.rc_context(STYLE):
        palette = plt.get_cmap("tab10")
        if grid.dim == 1:
            fig, ax = plt.subplots(figsize=(6, 0.5 + 0.35 * max(len(ids), 1)))
            x0, w = grid.lo[0], grid.widths[0]
            for row, k in enumerate(ids):
                node = cg.node(k)
                bits = np.zeros(grid.ncells + 2, dtype=np.int8)
                bits[node.cells + 1] = 1
                edges = np.flatnonzero(np.diff(bits))
                for a, b in zip(edges[::2], edges[1::2]):
                    ax.plot([x0 + a * w, x0 + b * w], [row, row], lw=6, solid_capstyle="butt",
                            color=NODE_COLORS[node.kind])
            ax.set_yticks(range(len(ids)), [f"node {k}" for k in ids])
            ax.set_xlim(grid.domain.lo[0], grid.domain.hi[0])
            ax.set_ylim(-0.8, len(ids) - 0.2)
            ax.set_xlabel("x")
        else:
            fig, ax = plt.subplots(figsize=(5, 5))
            code = np.full(grid.ncells, np.nan)
            for j, k in enumerate(ids):
                code[cg.node(k).cells] = j % 10
            ax.imshow(code.reshape(grid.shape), origin="lower", extent=_extent(grid),
                      cmap=palette, vmin=0, vmax=9, interpolation="nearest")
            for j, k in enumerate(ids):
                c = grid.centers(cg.node(k).cells).mean(axis=0)
                ax.annotate(str(k), c, color=palette(j % 10), fontsize=8, ha="center")
            ax.set_aspect("equal")
            ax.set_xlabel("x")
            ax.set_ylabel("y")
        ax.set_title(title or f"{len(ids)} {which} nodes, eta = {cg.eta:g}")
        fig.tight_layout()
        return _save(fig, path)


def plot_sweep(sweep: Sweep, path, title: str = "") -> Path:
    """Occupied bins per parameter as a bifurcation diagram."""
    bins = sweep.bins
    lo, hi = bins.domain.lo[0], bins.domain.hi[0]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 4))
        p0, p1 = float(sweep.params[0]), float(sweep.params[-1])
        if p0 == p1:
            p0, p1 = p0 - 0.5, p1 + 0.5
        ax.imshow(sweep.occupied.T, origin="lower", aspect="auto", extent=[p0, p1, lo, hi],
                  cmap="Greys", vmin=0, vmax=1, interpolation="nearest")
        ax.set_xlabel("parameter")
        ax.set_ylabel("x")
        ax.set_title(title or sweep.family)
        fig.tight_layout()
        return _save(fig, path)


def plot_trace(trace: list[float], path, unit: float = 1.0, title: str = "") -> Path:
    """Hausdorff distance between successive iterates, in units of ``unit``."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3))
        vals = np.asarray(trace, dtype=float) / unit
        ax.semilogy(np.arange(1, len(vals) + 1), np.maximum(vals, 1e-3), marker="o", ms=3)
        ax.set_xlabel("iteration")
        ax.set_ylabel("d_H (cell diameters)")
        ax.set_title(title or "successive iterates")
        fig.tight_layout()
        return _save(fig, path)
