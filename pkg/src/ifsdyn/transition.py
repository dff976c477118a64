"""Cell transition graphs: discretized orbits and eta-chains.

An edge ``c -> c'`` labelled by map ``i`` means that a chain may step from a
point of cell ``c`` through ``f_i`` to a point of cell ``c'``. For each map the
graph stores the *core* cover of every support cell (outer-approximated image
padded by ``slack``) and realizes the eta-enlargement lazily:

    targets(c, i) = dilate(core(c, i), eta) & support

When the enlarged edge list is small it is materialized as sparse matrices.
Otherwise only the core is kept and forward/backward steps are computed on
boolean cell vectors (``post`` and ``pre``), which is all the chain-graph
algorithms need.

Map indices in the public API are 1-based, like index-word letters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .cover import cover_pairs
from .errors import EmptySetError, GridMismatchError
from .grid import GridSet, GridSpec, dilate
from .maps import IfsSystem

# Upper bound on materialized edges (core entries times stencil size).
EXPLICIT_LIMIT = 20_000_000


@dataclass(frozen=True)
class CoreLayer:
    """Per-map CSR over support rows; column values are flat cell ids."""

    indptr: np.ndarray
    indices: np.ndarray

    def row(self, r: int) -> np.ndarray:
        return self.indices[self.indptr[r] : self.indptr[r + 1]]


def _csr_from_pairs(rows: np.ndarray, cols: np.ndarray, nrows: int) -> CoreLayer:
    counts = np.bincount(rows, minlength=nrows)
    indptr = np.zeros(nrows + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return CoreLayer(indptr, cols.astype(np.int64 if cols.max(initial=0) >= 2**31 else np.int32))


def ball_stencil(grid: GridSpec, r: float) -> np.ndarray:
    """Integer per-axis offsets (point order) whose center distance is <= r."""
    w = grid.widths
    k = np.floor(r / w * (1 + 1e-12)).astype(int)
    axes = [np.arange(-kk, kk + 1) for kk in k]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, grid.dim)
    dist = np.sqrt(((mesh * w) ** 2).sum(axis=1))
    return mesh[dist <= r * (1 + 1e-12)]


@dataclass(eq=False)
class TransitionGraph:
    ifs: IfsSystem
    grid: GridSpec
    support: GridSet
    slack: float
    eta: float
    core: list[CoreLayer]
    dropped: int
    support_ids: np.ndarray
    row_of: np.ndarray
    layers: list[sparse.csr_matrix] | None = None
    _union: sparse.csr_matrix | None = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return len(self.core)

    @property
    def explicit(self) -> bool:
        return self.layers is not None

    @property
    def nrows(self) -> int:
        return len(self.support_ids)

    def _maps(self, map_index):
        if map_index is None:
            return range(self.m)
        return [int(map_index) - 1]

    # -- set-valued steps -------------------------------------------------

    def core_image(self, s: np.ndarray, map_index: int | None = None) -> np.ndarray:
        """Union of the core covers of the support cells in ``s`` (no eta)."""
        rows = self.row_of[np.flatnonzero(s & self.support.bits)]
        out = np.zeros(self.grid.ncells, dtype=bool)
        for i in self._maps(map_index):
            layer = self.core[i]
            out[layer.indices[_ranges(layer.indptr[rows], layer.indptr[rows + 1])]] = True
        return out

    def post(self, s: np.ndarray, map_index: int | None = None) -> np.ndarray:
        """Cells reachable in one step from the cells of ``s`` (bool vector)."""
        img = self.core_image(s, map_index)
        if self.eta > 0 and img.any():
            img = dilate(GridSet(self.grid, img), self.eta).bits
        return img & self.support.bits

    def pre(self, s: np.ndarray, within: np.ndarray | None = None, map_index: int | None = None) -> np.ndarray:
        """Support cells (optionally only those in ``within``) with an edge into ``s``."""
        target = s & self.support.bits
        out = np.zeros(self.grid.ncells, dtype=bool)
        if not target.any():
            return out
        if self.eta > 0:
            target = dilate(GridSet(self.grid, target), self.eta).bits
        cand = self.support.bits if within is None else within & self.support.bits
        rows = self.row_of[np.flatnonzero(cand)]
        hit_rows = np.zeros(len(rows), dtype=bool)
        for i in self._maps(map_index):
            layer = self.core[i]
            starts, ends = layer.indptr[rows], layer.indptr[rows + 1]
            hit = target[layer.indices[_ranges(starts, ends)]]
            owner = np.repeat(np.arange(len(rows)), ends - starts)
            hit_rows[owner[hit]] = True
        out[self.support_ids[rows[hit_rows]]] = True
        return out

    # -- explicit views ---------------------------------------------------

    def successors(self, cell: int, map_index: int | None = None) -> np.ndarray:
        s = np.zeros(self.grid.ncells, dtype=bool)
        s[int(cell)] = True
        return np.flatnonzero(self.post(s, map_index))

    def union_matrix(self) -> sparse.csr_matrix:
        """Row/column indices are support positions (``support_ids``)."""
        if not self.explicit:
            raise ValueError("graph was built symbolically; no edge matrix available")
        if self._union is None:
            total = self.layers[0]
            for layer in self.layers[1:]:
                total = total + layer
            total = total.tocsr()
            total.sort_indices()
            total.data[:] = 1
            self._union = total.astype(bool)
        return self._union

    def edge_list(self, map_index: int | None = None) -> np.ndarray:
        """``(k, 2)`` array of (source cell, target cell), sorted, no duplicates."""
        if self.explicit:
            mat = self.union_matrix() if map_index is None else self.layers[int(map_index) - 1]
            coo = mat.tocoo()
            pairs = np.stack([self.support_ids[coo.row], self.support_ids[coo.col]], axis=1)
        else:
            chunks = []
            for c in self.support_ids:
                t = self.successors(c, map_index)
                chunks.append(np.stack([np.full(len(t), c), t], axis=1))
            pairs = np.concatenate(chunks) if chunks else np.zeros((0, 2), np.int64)
        pairs = np.unique(pairs.astype(np.int64), axis=0)
        return pairs

    def edge_count(self) -> int:
        return int(self.union_matrix().nnz) if self.explicit else len(self.edge_list())

    def has_self_loop(self, cells: np.ndarray) -> np.ndarray:
        """For each cell: does some edge return to the cell itself?"""
        cells = np.asarray(cells, dtype=np.int64)
        rows = self.row_of[cells]
        if self.explicit:
            return np.asarray(self.union_matrix()[rows, rows]).ravel().astype(bool)
        # c -> c is an edge iff some core target of c has its center within eta
        out = np.zeros(len(cells), dtype=bool)
        here = self.grid.centers(cells)
        for layer in self.core:
            starts, ends = layer.indptr[rows], layer.indptr[rows + 1]
            flat = _ranges(starts, ends)
            owner = np.repeat(np.arange(len(cells)), ends - starts)
            tgt = layer.indices[flat]
            dist = np.linalg.norm(self.grid.centers(tgt) - here[owner], axis=1)
            close = dist <= self.eta * (1 + 1e-12)
            out[owner[close]] = True
        return out


def _ranges(starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """Concatenation of ``arange(a, b)`` for each pair, vectorized."""
    counts = ends - starts
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    offsets = np.repeat(starts - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
    return np.arange(total) + offsets


def _enlarge(grid: GridSpec, support: GridSet, layer: CoreLayer, eta: float, nrows: int) -> sparse.csr_matrix:
    """Materialize dilate(core, eta) & support as a rows x rows boolean matrix."""
    row_of = np.full(grid.ncells, -1, dtype=np.int64)
    row_of[support.ids] = np.arange(nrows)
    rows = np.repeat(np.arange(nrows), np.diff(layer.indptr))
    cols = layer.indices.astype(np.int64)
    if eta > 0:
        stencil = ball_stencil(grid, eta)
        idx = grid.unravel(cols)
        counts = np.asarray(grid.counts)
        all_rows, all_cols = [], []
        for off in stencil:
            shifted = idx + off
            ok = np.all((shifted >= 0) & (shifted < counts), axis=1)
            all_rows.append(rows[ok])
            all_cols.append(grid.ravel(shifted[ok]))
        rows = np.concatenate(all_rows)
        cols = np.concatenate(all_cols)
    tgt = row_of[cols]
    keep = tgt >= 0
    mat = sparse.csr_matrix(
        (np.ones(int(keep.sum()), dtype=bool), (rows[keep], tgt[keep])), shape=(nrows, nrows)
    )
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def build_graph(
    ifs: IfsSystem,
    grid: GridSpec,
    support: GridSet,
    eta: float = 0.0,
    slack: float | None = None,
    explicit: bool | None = None,
) -> TransitionGraph:
    """Transition graph of ``ifs`` on ``support``.

    ``slack`` defaults to one cell diameter. ``explicit`` forces (True) or
    forbids (False) edge materialization; by default it is used whenever the
    enlarged edge count stays below ``EXPLICIT_LIMIT``.
    """
    if support.grid != grid:
        raise GridMismatchError("support lives on a different grid")
    if support.is_empty:
        raise EmptySetError("transition graph needs a nonempty support")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if slack is None:
        slack = grid.cell_diameter
    ids = support.ids
    nrows = len(ids)
    row_of = np.full(grid.ncells, -1, dtype=np.int64)
    row_of[ids] = np.arange(nrows)
    core, dropped = [], 0
    for fmap in ifs.maps:
        rows, cells = cover_pairs(fmap, grid, ids, slack)
        dropped += int(np.count_nonzero(~support.bits[cells]))
        core.append(_csr_from_pairs(rows, cells, nrows))
    stencil = len(ball_stencil(grid, eta)) if eta > 0 else 1
    work = sum(len(c.indices) for c in core) * stencil
    if explicit is None:
        explicit = work <= EXPLICIT_LIMIT
    layers = [_enlarge(grid, support, c, eta, nrows) for c in core] if explicit else None
    return TransitionGraph(ifs, grid, support, float(slack), float(eta), core, dropped, ids, row_of, layers)


def image_cells(ifs: IfsSystem, grid: GridSpec, map_index: int, cell: int, slack: float = 0.0) -> np.ndarray:
    """Sorted cell ids covering the image of one cell under map ``map_index``."""
    if slack < 0:
        raise ValueError("slack must be nonnegative")
    _, cells = cover_pairs(ifs.maps[int(map_index) - 1], grid, np.array([int(cell)]), slack)
    return np.unique(cells)


@dataclass(frozen=True)
class Reach:
    cells: GridSet
    steps: int
    converged: bool


def reachable_set(g: TransitionGraph, start: GridSet, steps: int | None = None) -> Reach:
    """Cells reachable from ``start`` in at most ``steps`` edges (``None``: unbounded)."""
    if start.grid != g.grid:
        raise GridMismatchError("start set lives on a different grid")
    cur = start.bits & g.support.bits
    frontier = cur.copy()
    n = 0
    while frontier.any() and (steps is None or n < steps):
        nxt = g.post(frontier) & ~cur
        n += 1
        cur = cur | nxt
        frontier = nxt
    return Reach(GridSet(g.grid, cur), n, not frontier.any())
