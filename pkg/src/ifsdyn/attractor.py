"""Hutchinson operator on cell sets, trapping regions, attractors and hyperchains."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .catalog import tent2, tent_landmarks
from .cover import cover_pairs, cover_union
from .errors import EmptySetError, GridMismatchError, PreconditionError, ResolutionError
from .grid import GridSet, GridSpec, dilate, hausdorff_distance
from .maps import IfsSystem


def hutchinson_step(ifs: IfsSystem, a: GridSet, slack: float = 0.0) -> GridSet:
    """Union over the maps of the outer-approximated images of ``a``'s cells.

    The default ``slack`` of zero keeps only the Lipschitz padding of the
    cover; transition graphs add their own slack on top of the same kernel.
    """
    if a.is_empty:
        raise EmptySetError("Hutchinson step of an empty set")
    bits = np.zeros(a.grid.ncells, dtype=bool)
    ids = a.ids
    for fmap in ifs.maps:
        bits |= cover_union(fmap, a.grid, ids, slack)
    return GridSet(a.grid, bits)


class ImageTable:
    """Precomputed per-cell covers of every map on a whole grid.

    Repeated Hutchinson steps on many sets of the same grid then reduce to
    gathers; ``step(a)`` equals ``hutchinson_step(ifs, a, slack)`` bit for bit.
    """

    def __init__(self, ifs: IfsSystem, grid: GridSpec, slack: float = 0.0):
        self.grid = grid
        self.slack = slack
        ids = np.flatnonzero(grid.mask)
        self.row_of = np.full(grid.ncells, -1, dtype=np.int64)
        self.row_of[ids] = np.arange(len(ids))
        self.layers = []
        for fmap in ifs.maps:
            rows, cells = cover_pairs(fmap, grid, ids, slack)
            indptr = np.zeros(len(ids) + 1, dtype=np.int64)
            np.cumsum(np.bincount(rows, minlength=len(ids)), out=indptr[1:])
            self.layers.append((indptr, cells))

    def step(self, a: GridSet) -> GridSet:
        if a.grid != self.grid:
            raise GridMismatchError("set lives on a different grid")
        if a.is_empty:
            raise EmptySetError("Hutchinson step of an empty set")
        rows = self.row_of[a.ids]
        bits = np.zeros(self.grid.ncells, dtype=bool)
        for indptr, cells in self.layers:
            starts, ends = indptr[rows], indptr[rows + 1]
            counts = ends - starts
            offsets = np.repeat(starts - (np.cumsum(counts) - counts), counts)
            bits[cells[np.arange(int(counts.sum())) + offsets]] = True
        return GridSet(self.grid, bits)


def iterate(ifs: IfsSystem, a: GridSet, n: int) -> GridSet:
    for _ in range(n):
        a = hutchinson_step(ifs, a)
    return a


def h_invariance_defect(ifs: IfsSystem, a: GridSet) -> float:
    return hausdorff_distance(hutchinson_step(ifs, a), a)


# ---------------------------------------------------------------------------
# Trapping regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Absorption:
    label: str
    steps: int | None  # None: not inside Q within the budget

    @property
    def absorbed(self) -> bool:
        return self.steps is not None


@dataclass(frozen=True)
class TrapReport:
    forward_invariant: bool
    escape_cells: np.ndarray
    absorption: list[Absorption]

    @property
    def all_absorbed(self) -> bool:
        return all(a.absorbed for a in self.absorption)

    def lines(self) -> list[str]:
        out = [
            f"forward_invariant {str(self.forward_invariant).lower()}",
            f"escape_cells {len(self.escape_cells)}",
        ]
        for a in self.absorption:
            out.append(f"absorb {a.label} {'timeout' if a.steps is None else a.steps}")
        return out


def default_samples(grid: GridSpec) -> list[tuple[str, GridSet]]:
    """Singletons at the domain corners (triangle vertices) and center."""
    dom = grid.domain
    pts = list(dom.corners()) + [dom.center()]
    labels = [f"corner{k}" for k in range(len(pts) - 1)] + ["center"]
    return [(lab, GridSet.from_points(grid, p)) for lab, p in zip(labels, pts)]


def verify_trapping(
    ifs: IfsSystem,
    q: GridSet,
    samples: Sequence[tuple[str, GridSet]] | None = None,
    budget: int = 50,
) -> TrapReport:
    if q.is_empty:
        raise EmptySetError("trapping region must be nonempty")
    escape = (hutchinson_step(ifs, q) - q).ids
    if samples is None:
        samples = default_samples(q.grid)
    results = []
    table = ImageTable(ifs, q.grid) if samples else None
    for label, k in samples:
        if k.grid != q.grid:
            raise GridMismatchError(f"sample {label} lives on a different grid")
        steps = None
        cur = k
        for n in range(budget + 1):
            if cur.issubset(q):
                steps = n
                break
            nxt = table.step(cur)
            if nxt == cur:
                # a fixed set outside q never gets absorbed
                break
            cur = nxt
        results.append(Absorption(label, steps))
    return TrapReport(len(escape) == 0, escape, results)


# ---------------------------------------------------------------------------
# Attractors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttractorResult:
    cells: GridSet
    iterations: int
    converged: bool
    trace: list[float] = field(default_factory=list)  # d_H between successive iterates


def global_attractor(
    ifs: IfsSystem,
    q: GridSet,
    tol: float | None = None,
    max_iters: int = 200,
    patience: int = 3,
) -> AttractorResult:
    """Decreasing iteration H^n(Q) from a forward-invariant region ``q``.

    Stops on an exact fixed point or once successive iterates stay within
    ``tol`` (default: one cell diameter) for ``patience`` steps in a row.
    """
    fwd = hutchinson_step(ifs, q)
    if not fwd.issubset(q):
        raise PreconditionError(
            f"region is not forward invariant: {len(fwd - q)} cells escape"
        )
    if tol is None:
        tol = q.grid.cell_diameter
    cur, nxt = q, fwd
    trace, calm = [], 0
    for n in range(1, max_iters + 1):
        if nxt == cur:
            trace.append(0.0)
            return AttractorResult(nxt, n, True, trace)
        d = hausdorff_distance(cur, nxt)
        trace.append(d)
        calm = calm + 1 if d < tol else 0
        if calm >= patience:
            return AttractorResult(nxt, n, True, trace)
        cur, nxt = nxt, hutchinson_step(ifs, nxt)
    return AttractorResult(cur, max_iters, False, trace)


@dataclass(frozen=True)
class LimitSet:
    cells: GridSet
    stabilized: bool


def limit_set(ifs: IfsSystem, a: GridSet, burn: int = 20, window: int = 5) -> LimitSet:
    """Union of H^n(a) for burn <= n <= burn + window."""
    if burn < 1 or window < 1:
        raise ValueError("burn and window must be at least 1")
    prev = iterate(ifs, a, burn - 1)
    cur = hutchinson_step(ifs, prev)
    stable = cur.issubset(dilate(prev, a.grid.cell_diameter))
    acc = cur
    for _ in range(window):
        cur = hutchinson_step(ifs, cur)
        acc = acc | cur
    return LimitSet(acc, stable)


# ---------------------------------------------------------------------------
# Contraction diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContractionReport:
    max_ratio_per_iter: list[float]  # nan where no pair was above the noise floor
    monotone: bool
    distances: np.ndarray  # (pairs, iters + 1)


def random_cells(grid: GridSpec, k: int, rng: np.random.Generator) -> GridSet:
    inside = np.flatnonzero(grid.mask & grid.domain.contains(grid.centers(), tol=0.0))
    return GridSet.from_ids(grid, rng.choice(inside, size=k, replace=False))


def contraction_diagnostic(
    ifs: IfsSystem,
    grid: GridSpec,
    pairs: int = 5,
    iters: int = 10,
    seed: int = 0,
    set_size: int = 1,
    floor_cells: float = 8.0,
) -> ContractionReport:
    """Track d_H(H^n A, H^n B) for random pairs of small cell sets.

    Ratios d_{n+1} / d_n are only recorded while d_n is at least
    ``floor_cells`` cell diameters; below that the grid dominates. The
    sequence counts as monotone when no step grows by more than one cell
    diameter.
    """
    if pairs < 1 or iters < 2:
        raise ValueError("need pairs >= 1 and iters >= 2")
    rng = np.random.default_rng(seed)
    diam = grid.cell_diameter
    table = ImageTable(ifs, grid)
    dist = np.zeros((pairs, iters + 1))
    for p in range(pairs):
        a = random_cells(grid, set_size, rng)
        b = random_cells(grid, set_size, rng)
        for n in range(iters + 1):
            dist[p, n] = hausdorff_distance(a, b)
            if n < iters:
                a, b = table.step(a), table.step(b)
    ratios = []
    for n in range(iters):
        ok = dist[:, n] >= floor_cells * diam
        ratios.append(float(np.max(dist[ok, n + 1] / dist[ok, n])) if ok.any() else math.nan)
    monotone = bool(np.all(np.diff(dist, axis=1) <= diam * (1 + 1e-9)))
    return ContractionReport(ratios, monotone, dist)


# ---------------------------------------------------------------------------
# Hyperspace chains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HyperChain:
    sets: list[GridSet]
    epsilon: float
    gaps: list[float] | None = None
    label: str = ""

    @property
    def verified(self) -> bool:
        return self.gaps is not None and all(g < self.epsilon for g in self.gaps)

    def worst_gap(self) -> tuple[int, float]:
        k = int(np.argmax(self.gaps))
        return k, float(self.gaps[k])

    def lines(self) -> list[str]:
        out = [f"chain {self.label or 'unnamed'} epsilon {self.epsilon!r} sets {len(self.sets)}"]
        if self.gaps is not None:
            out += [f"gap {j} {g!r}" for j, g in enumerate(self.gaps)]
            out.append(f"verified {str(self.verified).lower()}")
        return out


def verify_hyperchain(ifs: IfsSystem, chain: HyperChain) -> HyperChain:
    """Fill in d_H(H(K_j), K_{j+1}) for every link."""
    if len(chain.sets) < 2:
        raise ValueError("a chain needs at least two sets")
    grid = chain.sets[0].grid
    for s in chain.sets:
        if s.grid != grid:
            raise GridMismatchError("chain sets live on different grids")
        if s.is_empty:
            raise EmptySetError("chain sets must be nonempty")
    gaps = [hausdorff_distance(hutchinson_step(ifs, a), b) for a, b in zip(chain.sets, chain.sets[1:])]
    return HyperChain(list(chain.sets), chain.epsilon, gaps, chain.label)


ChainKind = Literal["zero_to_zeroA", "zeroA_to_A", "interval_to_zeroA"]
TENT_CHAIN_KINDS = ("zero_to_zeroA", "zeroA_to_A", "interval_to_zeroA")


def tent_hyperchain(
    s: float,
    s2: float,
    kind: ChainKind,
    epsilon: float,
    grid: GridSpec | None = None,
    max_steps: int = 500,
) -> HyperChain:
    """Explicit Hutchinson epsilon-chains of the two-tent system.

    Every chain is ``start, F + M_0, F + H(M_0), ..., F + A`` where ``F`` is a
    part held fixed, ``M_0`` a seed placed within ``epsilon`` of the start's
    moving part, and ``A = [ell, c1]``:

    * ``zero_to_zeroA``: from {0} to {0} + A, F = {0}, M_0 = s^-n [ell, 1/2]
    * ``zeroA_to_A``: from {0} + A to A, F = A, M_0 = s^-n [ell, 1/2]
    * ``interval_to_zeroA``: from [0, c1] to {0} + A, F = {0}, M_0 = [eps/2, c1]

    ``n`` is the least integer with s^-n < 2 epsilon, so M_0 lies within
    epsilon of 0. The Hutchinson iterates of the seed are appended until they
    come within epsilon / 2 of A, and the chain closes on F + A.
    """
    if not (s >= s2 > math.sqrt(2)) or s > 2:
        raise ValueError("tent chains need 2 >= s >= s2 > sqrt(2)")
    if kind not in TENT_CHAIN_KINDS:
        raise ValueError(f"unknown chain kind {kind!r}")
    ifs = tent2(s, s2)
    if grid is None:
        grid = GridSpec(ifs.domain, (200_000,))
    if epsilon <= 4 * grid.cell_diameter:
        raise ResolutionError(
            f"epsilon {epsilon} is not above 4 cell widths ({4 * grid.cell_diameter:.3g})"
        )
    marks = tent_landmarks(s, s2)
    ell, c1 = marks["ell"], marks["c1"]
    zero = GridSet.from_points(grid, 0.0)
    a_set = GridSet.interval(grid, ell, c1)
    n = math.floor(math.log(1 / (2 * epsilon)) / math.log(s)) + 1
    scale = s ** (-n)
    k_n = GridSet.interval(grid, scale * ell, scale * 0.5)
    if kind == "zero_to_zeroA":
        start, fixed, seed = zero, zero, k_n
    elif kind == "zeroA_to_A":
        start, fixed, seed = zero | a_set, a_set, k_n
    else:
        start, fixed, seed = GridSet.interval(grid, 0.0, c1), zero, GridSet.interval(grid, epsilon / 2, c1)
    target = fixed | a_set
    sets = [start]
    moving = seed
    for _ in range(max_steps):
        cur = fixed | moving
        sets.append(cur)
        if hausdorff_distance(cur, target) < epsilon / 2:
            break
        nxt = hutchinson_step(ifs, moving)
        if nxt == moving:
            break
        moving = nxt
    if sets[-1] != target:
        sets.append(target)
    return HyperChain(sets, epsilon, None, f"{kind}@{epsilon:g}")
