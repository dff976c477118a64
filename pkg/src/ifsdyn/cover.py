"""Outer approximation of cell images under a single map.

For 1D maps with an analytic interval image the image of a cell is exact and
only ``slack`` pads it. Everything else goes through a sampled cover: the map
is evaluated on a 3x3 lattice in the cell (corners, edge midpoints, center),
and every image point is surrounded by a disc of radius
``L * cell_diameter / 2 + slack`` where ``L`` bounds the local Lipschitz
constant on the cell. Each point of the cell lies within ``cell_diameter / 2``
of a lattice point, so the union of discs contains the true image whenever
``L`` is a valid bound.
"""

from __future__ import annotations

import numpy as np

from .grid import GridSpec
from .maps import MapSpec
from .parallel import ordered_map

LATTICE = np.array([(fx, fy) for fy in (0.0, 0.5, 1.0) for fx in (0.0, 0.5, 1.0)])
CHUNK = 1 << 15


def cover_radius(fmap: MapSpec, grid: GridSpec, lo: np.ndarray, hi: np.ndarray, slack: float) -> np.ndarray:
    return fmap.lipschitz(lo, hi) * (grid.cell_diameter / 2) + slack


def _cover_1d(fmap: MapSpec, grid: GridSpec, ids: np.ndarray, slack: float):
    lo, hi = grid.cell_boxes(ids)
    lo, hi = lo[:, 0], hi[:, 0]
    x0, h, n = grid.lo[0], grid.widths[0], grid.ncells
    if fmap.has_interval_image:
        a, b = fmap.interval_image(lo, hi)
        a, b = a - slack, b + slack
    else:
        pts = np.stack([lo, (lo + hi) / 2, hi], axis=1)
        img = fmap(pts.reshape(-1, 1)).reshape(-1, 3)
        r = cover_radius(fmap, grid, lo[:, None], hi[:, None], slack)
        a, b = img.min(axis=1) - r, img.max(axis=1) + r
    first = np.clip(np.floor((a - x0) / h), 0, n - 1).astype(np.int64)
    last = np.clip(np.ceil((b - x0) / h) - 1, 0, n - 1).astype(np.int64)
    last = np.maximum(last, first)
    counts = last - first + 1
    rows = np.repeat(np.arange(len(ids)), counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    return rows, first[rows] + offsets


def _cover_2d(fmap: MapSpec, grid: GridSpec, ids: np.ndarray, slack: float):
    lo, hi = grid.cell_boxes(ids)
    w = grid.widths
    org = grid.lo
    nx, ny = grid.counts
    pts = lo[:, None, :] + LATTICE[None, :, :] * w
    pts = grid.domain.project(pts.reshape(-1, 2))
    q = fmap(pts).reshape(len(ids), 9, 2)
    r = cover_radius(fmap, grid, lo, hi, slack)
    qlo = q.min(axis=1) - r[:, None]
    qhi = q.max(axis=1) + r[:, None]
    first = np.floor((qlo - org) / w).astype(np.int64)
    last = np.ceil((qhi - org) / w).astype(np.int64) - 1
    first = np.clip(first, 0, [nx - 1, ny - 1])
    last = np.clip(np.maximum(last, first), 0, [nx - 1, ny - 1])
    span = last - first + 1
    out_rows, out_ids = [], []
    keys = span[:, 0] * (ny + 1) + span[:, 1]
    for key in np.unique(keys):
        sel = np.flatnonzero(keys == key)
        sx, sy = int(span[sel[0], 0]), int(span[sel[0], 1])
        ox, oy = np.meshgrid(np.arange(sx), np.arange(sy), indexing="xy")
        ix = first[sel, 0, None] + ox.ravel()[None, :]
        iy = first[sel, 1, None] + oy.ravel()[None, :]
        bx0 = org[0] + ix * w[0]
        by0 = org[1] + iy * w[1]
        hit = np.zeros(ix.shape, dtype=bool)
        rr = (r[sel] ** 2)[:, None]
        for k in range(9):
            qx = q[sel, k, 0][:, None]
            qy = q[sel, k, 1][:, None]
            dx = np.maximum(np.maximum(bx0 - qx, qx - (bx0 + w[0])), 0.0)
            dy = np.maximum(np.maximum(by0 - qy, qy - (by0 + w[1])), 0.0)
            hit |= dx * dx + dy * dy <= rr
        cells = iy * nx + ix
        rows = np.broadcast_to(sel[:, None], ix.shape)
        out_rows.append(rows[hit])
        out_ids.append(cells[hit])
    rows = np.concatenate(out_rows)
    cells = np.concatenate(out_ids)
    keep = grid.mask[cells]
    rows, cells = rows[keep], cells[keep]
    order = np.lexsort((cells, rows))
    return rows[order], cells[order]


def cover_pairs(fmap: MapSpec, grid: GridSpec, ids: np.ndarray, slack: float):
    """(row, target) pairs: ``row`` indexes ``ids``; targets sorted within a row."""
    ids = np.asarray(ids, dtype=np.int64)
    kernel = _cover_1d if grid.dim == 1 else _cover_2d
    if len(ids) == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    starts = range(0, len(ids), CHUNK)
    parts = ordered_map(lambda s: kernel(fmap, grid, ids[s : s + CHUNK], slack), starts)
    rows = np.concatenate([p[0] + s for p, s in zip(parts, starts)])
    cells = np.concatenate([p[1] for p in parts])
    return rows, cells


def cover_union(fmap: MapSpec, grid: GridSpec, ids: np.ndarray, slack: float) -> np.ndarray:
    """Boolean vector over all cells: union of the covers of ``ids``."""
    out = np.zeros(grid.ncells, dtype=bool)
    ids = np.asarray(ids, dtype=np.int64)

    def work(s):
        part = np.zeros(grid.ncells, dtype=bool)
        part[kernel(fmap, grid, ids[s : s + CHUNK], slack)[1]] = True
        return part

    kernel = _cover_1d if grid.dim == 1 else _cover_2d
    for part in ordered_map(work, range(0, len(ids), CHUNK)):
        out |= part
    return out
