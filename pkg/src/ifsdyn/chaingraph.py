"""Chain-recurrent components, node classification and node graphs.

Components are the strongly connected components of the union transition
graph restricted to the support, numbered by their smallest cell id.

Classification
--------------
weak component
    a component with more than one cell, or a single cell with a self-loop
    that is backed by the maps themselves: some sample point of the cell is
    sent by some generator to a cell whose center is within ``eta`` of the
    cell's center (the same cell when ``eta == 0``). Self-loops created only
    by the cover slack do not count.
node (weak node)
    one or more weak components, merged at grid scale (see ``classify``).
strong node
    a node containing a nonempty set ``S`` of its cells that the maps keep
    inside ``S``: every cell of ``S`` has a sample point all of whose images
    land in cells of ``S``. ``S`` is computed as a greatest fixed point
    starting from the whole node and is kept as the node's invariant core.
transient
    every component outside the nodes.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import EmptySetError
from .grid import GridSet
from .transition import TransitionGraph, ball_stencil, reachable_set

TRANSIENT, WEAK, STRONG = 0, 1, 2
CLASS_NAMES = {TRANSIENT: "transient", WEAK: "weak_node", STRONG: "strong_node"}
Which = Literal["strong", "weak"]

# Interior sample fractions per axis: kept off cell edges so that a sample
# never lands on a boundary shared with a neighbor.
SAMPLE_FRACTIONS = (0.25, 0.5, 0.75)


# ---------------------------------------------------------------------------
# SCC algorithms
# ---------------------------------------------------------------------------


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber components so that ids increase with their smallest member."""
    labels = np.asarray(labels)
    n = len(labels)
    first = np.full(labels.max(initial=-1) + 1, n, dtype=np.int64)
    np.minimum.at(first, labels, np.arange(n))
    used = first < n
    order = np.argsort(first[used], kind="stable")
    remap = np.full(len(first), -1, dtype=np.int64)
    remap[np.flatnonzero(used)[order]] = np.arange(len(order))
    return remap[labels]


def scc_matrix(mat: sparse.spmatrix) -> np.ndarray:
    """SCC labels of a square adjacency matrix, canonically numbered."""
    _, labels = csgraph.connected_components(mat, directed=True, connection="strong")
    return canonical_labels(labels)


def scc_forward_backward(
    post: Callable[[np.ndarray], np.ndarray],
    pre: Callable[[np.ndarray, np.ndarray], np.ndarray],
    nodes: np.ndarray,
) -> np.ndarray:
    """SCCs from set-valued successor/predecessor operators.

    ``nodes`` is a boolean vector of the vertices to decompose; ``post(S)``
    returns the successors of ``S`` and ``pre(S, W)`` the predecessors of
    ``S`` that lie in ``W``, both as boolean vectors of the same length. Vertices outside
    ``nodes`` get label -1. Labels are canonical over the whole vector.
    """
    n = len(nodes)
    labels = np.full(n, -1, dtype=np.int64)
    next_label = 0
    stack = [np.asarray(nodes, dtype=bool).copy()]
    while stack:
        s = stack.pop()
        # trim: vertices without a successor or predecessor inside s are
        # singleton components
        while True:
            keep = s & post(s) & pre(s, s)
            gone = np.flatnonzero(s & ~keep)
            if len(gone) == 0:
                break
            labels[gone] = next_label + np.arange(len(gone))
            next_label += len(gone)
            s = keep
        if not s.any():
            continue
        pivot = np.zeros(n, dtype=bool)
        pivot[np.argmax(s)] = True
        fwd = _closure(pivot, lambda x: post(x) & s)
        bwd = _closure(pivot, lambda x: pre(x, s))
        comp = fwd & bwd
        labels[comp] = next_label
        next_label += 1
        for part in (fwd & ~comp, bwd & ~comp, s & ~(fwd | bwd)):
            if part.any():
                stack.append(part)
    inside = labels >= 0
    labels[inside] = canonical_labels(labels[inside])
    return labels


def _closure(start: np.ndarray, step) -> np.ndarray:
    cur = start.copy()
    frontier = start
    while frontier.any():
        nxt = step(frontier) & ~cur
        cur |= nxt
        frontier = nxt
    return cur


# ---------------------------------------------------------------------------
# ChainGraph
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Node:
    """A chain node: one or more weak components merged at grid scale."""

    id: int
    components: tuple[int, ...]
    cells: np.ndarray
    strong: bool
    core: np.ndarray  # invariant core cells (empty unless strong)

    @property
    def kind(self) -> str:
        return CLASS_NAMES[STRONG if self.strong else WEAK]


@dataclass(eq=False)
class ChainGraph:
    graph: TransitionGraph
    labels: np.ndarray  # component id per support row
    ncomponents: int
    condensation_edges: np.ndarray | None  # (k, 2) component pairs; explicit graphs only
    node_list: list[Node] | None = None
    _order: np.ndarray | None = field(default=None, repr=False)
    _bounds: np.ndarray | None = field(default=None, repr=False)
    _reach: dict = field(default_factory=dict, repr=False)

    @property
    def eta(self) -> float:
        return self.graph.eta

    @property
    def grid(self):
        return self.graph.grid

    def _index(self):
        if self._order is None:
            self._order = np.argsort(self.labels, kind="stable")
            self._bounds = np.searchsorted(self.labels[self._order], np.arange(self.ncomponents + 1))
        return self._order, self._bounds

    def component_cells(self, k: int) -> np.ndarray:
        order, bounds = self._index()
        return self.graph.support_ids[order[bounds[k] : bounds[k + 1]]]

    def component_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.ncomponents)

    def component_set(self, k: int) -> GridSet:
        return GridSet.from_ids(self.grid, self.component_cells(k))

    def component_of(self, cell: int) -> int:
        row = self.graph.row_of[int(cell)]
        if row < 0:
            raise KeyError(f"cell {cell} is not in the support")
        return int(self.labels[row])

    @property
    def classified(self) -> bool:
        return self.node_list is not None

    def nodes(self, which: Which = "weak") -> list[int]:
        """Ids of the nodes of the requested class (strong nodes are also weak)."""
        if self.node_list is None:
            raise ValueError("chain graph is not classified yet")
        return [n.id for n in self.node_list if which == "weak" or n.strong]

    def node(self, k: int) -> Node:
        return self.node_list[k]

    def node_set(self, k: int) -> GridSet:
        return GridSet.from_ids(self.grid, self.node_list[k].cells)

    def node_of(self, cell: int) -> int | None:
        comp = self.component_of(cell)
        for n in self.node_list:
            if comp in n.components:
                return n.id
        return None

    def component_classes(self) -> np.ndarray:
        classes = np.zeros(self.ncomponents, dtype=np.int8)
        for n in self.node_list or ():
            classes[list(n.components)] = STRONG if n.strong else WEAK
        return classes

    def reach(self, cells: np.ndarray) -> np.ndarray:
        """Forward closure (bool vector) of a cell set in the union graph."""
        key = cells.tobytes()
        if key not in self._reach:
            self._reach[key] = reachable_set(self.graph, GridSet.from_ids(self.grid, cells)).cells.bits
        return self._reach[key]


def condense(g: TransitionGraph) -> ChainGraph:
    """SCC decomposition of the union graph on the support."""
    if g.explicit:
        mat = g.union_matrix()
        labels = scc_matrix(mat)
        coo = mat.tocoo()
        a, b = labels[coo.row], labels[coo.col]
        diff = a != b
        edges = np.unique(np.stack([a[diff], b[diff]], axis=1), axis=0) if diff.any() else np.zeros((0, 2), np.int64)
    else:
        full = scc_forward_backward(g.post, g.pre, g.support.bits.copy())
        labels = canonical_labels(full[g.support_ids])
        edges = None
    return ChainGraph(g, labels, int(labels.max(initial=-1) + 1), edges)


def _samples(grid, cells: np.ndarray) -> np.ndarray:
    """(k, s, dim) interior sample points of each cell."""
    f = np.asarray(SAMPLE_FRACTIONS)
    if grid.dim == 1:
        frac = f[:, None]
    else:
        fx, fy = np.meshgrid(f, f, indexing="xy")
        frac = np.stack([fx.ravel(), fy.ravel()], axis=1)
    lo, _ = grid.cell_boxes(cells)
    return lo[:, None, :] + frac[None] * grid.widths


def _sample_images(g: TransitionGraph, cells: np.ndarray) -> np.ndarray:
    """(k, s, m) cell ids of the images of every sample under every map."""
    grid = g.grid
    pts = _samples(grid, cells)
    k, s, dim = pts.shape
    flat = grid.domain.project(pts.reshape(-1, dim))
    out = np.empty((k, s, g.m), dtype=np.int64)
    for i, fmap in enumerate(g.ifs.maps):
        out[:, :, i] = grid.cell_of_point(fmap(flat)).reshape(k, s)
    return out


def _witnessed_loop(g: TransitionGraph, cells: np.ndarray) -> np.ndarray:
    imgs = _sample_images(g, cells)
    grid = g.grid
    c0 = grid.centers(cells)[:, None, None, :]
    c1 = grid.centers(imgs.reshape(-1)).reshape(*imgs.shape, grid.dim)
    dist = np.sqrt(((c1 - c0) ** 2).sum(axis=-1))
    return np.any(dist <= g.eta * (1 + 1e-12), axis=(1, 2))


def invariant_core(g: TransitionGraph, cells: np.ndarray) -> np.ndarray:
    """Largest subset S of ``cells`` whose cells each own a sample mapped into S by every map."""
    imgs = _sample_images(g, cells)
    inside = np.zeros(g.grid.ncells, dtype=bool)
    inside[cells] = True
    alive = np.ones(len(cells), dtype=bool)
    while True:
        ok = np.all(inside[imgs], axis=2).any(axis=1) & alive
        if np.array_equal(ok, alive):
            return cells[alive]
        alive = ok
        inside[:] = False
        inside[cells[alive]] = True


def weak_components(cg: ChainGraph) -> np.ndarray:
    """Components that are nontrivial or carry a map-witnessed self-loop."""
    g = cg.graph
    sizes = cg.component_sizes()
    weak = sizes > 1
    singles = np.flatnonzero(sizes == 1)
    if len(singles):
        order, bounds = cg._index()
        cells = g.support_ids[order[bounds[singles]]]
        looped = g.has_self_loop(cells)
        if looped.any():
            weak[singles[looped][_witnessed_loop(g, cells[looped])]] = True
    return np.flatnonzero(weak)


def _touching_pairs(cg: ChainGraph, comps: np.ndarray) -> set[tuple[int, int]]:
    """Pairs of the given components with cells at most one cell diameter apart."""
    grid = cg.grid
    owner = np.full(grid.ncells, -1, dtype=np.int64)
    for k in comps:
        owner[cg.component_cells(k)] = k
    cells = np.flatnonzero(owner >= 0)
    idx = grid.unravel(cells)
    counts = np.asarray(grid.counts)
    pairs = set()
    for off in ball_stencil(grid, grid.cell_diameter):
        if not off.any():
            continue
        nb = idx + off
        ok = np.all((nb >= 0) & (nb < counts), axis=1)
        a = owner[cells[ok]]
        b = owner[grid.ravel(nb[ok])]
        sel = (b >= 0) & (a != b)
        for x, y in set(zip(a[sel].tolist(), b[sel].tolist())):
            pairs.add((min(x, y), max(x, y)))
    return pairs


def classify(cg: ChainGraph, merge: bool = True) -> ChainGraph:
    """Group weak components into nodes and test each node for strength.

    With ``merge`` (the default) weak components that touch at grid scale and
    are ordered by reachability (one reaches the other) form a single node.
    The chain relation is closed, so two such pieces cannot be told apart at
    the resolution of the grid.
    """
    g = cg.graph
    weak = weak_components(cg)
    parent = {int(k): int(k) for k in weak}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    if merge and len(weak) > 1:
        for a, b in sorted(_touching_pairs(cg, weak)):
            if find(a) == find(b):
                continue
            ra = cg.reach(cg.component_cells(a))
            rb = cg.reach(cg.component_cells(b))
            if ra[cg.component_cells(b)].any() or rb[cg.component_cells(a)].any():
                x, y = find(a), find(b)
                parent[max(x, y)] = min(x, y)
    groups: dict[int, list[int]] = {}
    for k in weak:
        groups.setdefault(find(int(k)), []).append(int(k))
    nodes = []
    # components are numbered by smallest cell, so the root is the smallest
    for nid, root in enumerate(sorted(groups)):
        members = tuple(sorted(groups[root]))
        cells = np.sort(np.concatenate([cg.component_cells(k) for k in members]))
        core = invariant_core(g, cells)
        nodes.append(Node(nid, members, cells, len(core) > 0, core))
    cg.node_list = nodes
    return cg


def chain_graph(g: TransitionGraph, merge: bool = True) -> ChainGraph:
    """``condense`` followed by ``classify``."""
    return classify(condense(g), merge)


def recurrent_set(cg: ChainGraph, which: Which = "weak") -> GridSet:
    bits = np.zeros(cg.grid.ncells, dtype=bool)
    for k in cg.nodes(which):
        bits[cg.node(k).cells] = True
    return GridSet(cg.grid, bits)


# ---------------------------------------------------------------------------
# Node graph
# ---------------------------------------------------------------------------


def _node_closure(cg: ChainGraph) -> dict[int, set[int]]:
    """For every node: the other nodes reachable from it."""
    owner = np.full(cg.grid.ncells, -1, dtype=np.int64)
    for n in cg.node_list:
        owner[n.cells] = n.id
    closure = {}
    for n in cg.node_list:
        hit = set(np.unique(owner[cg.reach(n.cells)]).tolist()) - {-1, n.id}
        closure[n.id] = hit
    return closure


def node_edges(
    cg: ChainGraph, which: Which = "weak", view: Literal["closure", "reduction"] = "closure"
) -> list[tuple[int, int]]:
    """Edges M -> N between nodes of the requested class.

    ``closure`` lists every pair joined by a path through any components;
    ``reduction`` keeps only pairs not implied by a longer path.
    """
    nodes = set(cg.nodes(which))
    full = _node_closure(cg)
    closure = {k: full[k] & nodes for k in nodes}
    pairs = sorted((a, b) for a in closure for b in closure[a])
    if view == "closure":
        return pairs
    if view != "reduction":
        raise ValueError(f"unknown view {view!r}")
    return [(a, b) for a, b in pairs if not any(b in closure[c] for c in closure[a] if c != b)]


@dataclass(frozen=True)
class Connectivity:
    connected: bool
    families: list[list[int]]


def connectivity(cg: ChainGraph, which: Which = "weak") -> Connectivity:
    nodes = cg.nodes(which)
    if not nodes:
        raise EmptySetError(f"the {which} node graph has no nodes")
    parent = {k: k for k in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in node_edges(cg, which):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    fams: dict[int, list[int]] = {}
    for k in nodes:
        fams.setdefault(find(k), []).append(k)
    families = sorted(fams.values())
    return Connectivity(len(families) == 1, families)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def _bbox_text(cg: ChainGraph, k: int) -> str:
    lo, hi = cg.node_set(k).span()
    return "[" + ";".join(f"{a:.6g}..{b:.6g}" for a, b in zip(lo, hi)) + "]"


def inventory_csv(cg: ChainGraph) -> str:
    """One row per node: id, class, cell count, invariant-core size, bounding box."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node", "class", "cells", "core_cells", "components", "bbox"])
    for n in cg.node_list:
        w.writerow([n.id, n.kind, len(n.cells), len(n.core), len(n.components), _bbox_text(cg, n.id)])
    return buf.getvalue()


def to_dot(cg: ChainGraph, which: Which = "weak", view: Literal["closure", "reduction"] = "reduction") -> str:
    lines = [f'digraph "{which}_nodes" {{', "  rankdir=TB;"]
    for k in cg.nodes(which):
        n = cg.node(k)
        label = f"{n.kind}\\n{len(n.cells)} cells\\n{_bbox_text(cg, k)}"
        lines.append(f'  node{k} [label="{label}"];')
    for a, b in node_edges(cg, which, view):
        lines.append(f"  node{a} -> node{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"
