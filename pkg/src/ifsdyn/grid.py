"""Uniform grids over a domain, cell sets, and the Hausdorff metric on them.

Conventions
-----------
* Arrays are stored in C order: shape ``(n,)`` in 1D and ``(ny, nx)`` in 2D.
  A flat cell id is ``iy * nx + ix``.
* Points are ``(x,)`` or ``(x, y)``.
* Metric questions are answered on cell centers; every tolerance downstream
  budgets for the half-diagonal this costs.
"""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, EmptySetError, GridMismatchError
from .maps import Domain, as_points

DEFAULT_CELL_CAP = 2**24


@dataclass(frozen=True)
class GridSpec:
    domain: Domain
    shape: tuple[int, ...]
    cap: int = DEFAULT_CELL_CAP

    def __post_init__(self):
        shape = tuple(int(n) for n in np.atleast_1d(self.shape))
        object.__setattr__(self, "shape", shape)
        if len(shape) != self.domain.dim:
            raise ConfigurationError(f"grid shape {shape} does not match a {self.domain.dim}D domain")
        if any(n < 1 for n in shape):
            raise ConfigurationError("grid resolution must be at least 1 per axis")
        if math.prod(shape) > self.cap:
            raise ConfigurationError(f"{math.prod(shape)} cells exceed the cap of {self.cap}")

    @classmethod
    def uniform(cls, domain: Domain, res: int, **kw) -> "GridSpec":
        """``res`` cells per axis."""
        return cls(domain, (res,) * domain.dim, **kw)

    # -- geometry ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def ncells(self) -> int:
        return math.prod(self.shape)

    @property
    def counts(self) -> tuple[int, ...]:
        """Cells per axis in point order (x first)."""
        return self.shape[::-1]

    @cached_property
    def widths(self) -> np.ndarray:
        lo, hi = np.asarray(self.domain.lo), np.asarray(self.domain.hi)
        return (hi - lo) / np.asarray(self.counts)

    @property
    def cell_diameter(self) -> float:
        return float(np.linalg.norm(self.widths))

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.domain.lo)

    def unravel(self, ids) -> np.ndarray:
        """Per-axis integer indices in point order, shape (k, dim)."""
        ids = np.asarray(ids, dtype=np.int64)
        if self.dim == 1:
            return ids.reshape(-1, 1)
        nx = self.shape[1]
        return np.stack([ids % nx, ids // nx], axis=1)

    def ravel(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if self.dim == 1:
            return idx[:, 0]
        return idx[:, 1] * self.shape[1] + idx[:, 0]

    def centers(self, ids=None) -> np.ndarray:
        if ids is None:
            ids = np.arange(self.ncells)
        return self.lo + (self.unravel(ids) + 0.5) * self.widths

    def cell_boxes(self, ids) -> tuple[np.ndarray, np.ndarray]:
        lo = self.lo + self.unravel(ids) * self.widths
        return lo, lo + self.widths

    def axis_index(self, pts: np.ndarray) -> np.ndarray:
        """Per-axis floor index of each point, clamped to the grid."""
        pts = as_points(pts, self.dim)
        idx = np.floor((pts - self.lo) / self.widths).astype(np.int64)
        return np.clip(idx, 0, np.asarray(self.counts) - 1)

    def cell_of_point(self, pts) -> np.ndarray:
        return self.ravel(self.axis_index(pts))

    # -- mask -------------------------------------------------------------

    @cached_property
    def mask(self) -> np.ndarray:
        """Flat boolean array: cells whose closed box meets the domain."""
        if self.domain.triangle is None:
            m = np.ones(self.ncells, dtype=bool)
        else:
            m = self._triangle_mask()
        m.setflags(write=False)
        return m

    def _triangle_mask(self) -> np.ndarray:
        tri = np.asarray(self.domain.triangle)
        c = self.centers()
        half = self.widths / 2
        tol = 1e-12 * max(1.0, float(np.abs(tri).max()))
        keep = np.ones(self.ncells, dtype=bool)
        # separating axis test: the box axes are covered by the bounding box,
        # so only the three edge normals remain
        for k in range(3):
            e = tri[(k + 1) % 3] - tri[k]
            n = np.array([-e[1], e[0]])
            proj = tri @ n
            reach = half[0] * abs(n[0]) + half[1] * abs(n[1])
            cp = c @ n
            keep &= (cp + reach >= proj.min() - tol) & (cp - reach <= proj.max() + tol)
        return keep

    @property
    def array_shape(self) -> tuple[int, ...]:
        return self.shape


@dataclass(frozen=True, eq=False)
class GridSet:
    """Immutable set of grid cells, stored as a flat boolean vector."""

    grid: GridSpec
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool).reshape(-1)
        if bits.size != self.grid.ncells:
            raise GridMismatchError(f"bit vector of size {bits.size} on a grid of {self.grid.ncells} cells")
        bits = bits & self.grid.mask
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    # -- constructors -----------------------------------------------------

    @classmethod
    def empty(cls, grid: GridSpec) -> "GridSet":
        return cls(grid, np.zeros(grid.ncells, dtype=bool))

    @classmethod
    def full(cls, grid: GridSpec) -> "GridSet":
        return cls(grid, grid.mask)

    @classmethod
    def from_ids(cls, grid: GridSpec, ids) -> "GridSet":
        bits = np.zeros(grid.ncells, dtype=bool)
        bits[np.asarray(ids, dtype=np.int64)] = True
        return cls(grid, bits)

    @classmethod
    def from_points(cls, grid: GridSpec, pts) -> "GridSet":
        return cls.from_ids(grid, grid.cell_of_point(pts))

    @classmethod
    def from_predicate(cls, grid: GridSpec, pred) -> "GridSet":
        """Cells whose center satisfies ``pred(points) -> bool array``."""
        return cls(grid, np.asarray(pred(grid.centers()), dtype=bool))

    @classmethod
    def interval(cls, grid: GridSpec, a: float, b: float) -> "GridSet":
        """1D: all cells whose closed extent meets ``[a, b]``."""
        if grid.dim != 1:
            raise ConfigurationError("interval sets live on 1D grids")
        lo, hi = grid.cell_boxes(np.arange(grid.ncells))
        return cls(grid, (hi[:, 0] >= a) & (lo[:, 0] <= b))

    # -- queries ----------------------------------------------------------

    @property
    def ids(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def __len__(self) -> int:
        return int(np.count_nonzero(self.bits))

    @property
    def is_empty(self) -> bool:
        return not self.bits.any()

    def points(self) -> np.ndarray:
        return self.grid.centers(self.ids)

    def as_array(self) -> np.ndarray:
        return self.bits.reshape(self.grid.shape)

    def __contains__(self, cell) -> bool:
        return bool(self.bits[int(cell)])

    def issubset(self, other: "GridSet") -> bool:
        _same_grid(self, other)
        return not np.any(self.bits & ~other.bits)

    def __le__(self, other: "GridSet") -> bool:
        return self.issubset(other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridSet):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.grid, self.bits.tobytes()))

    def __or__(self, other: "GridSet") -> "GridSet":
        return set_algebra(self, other, "union")

    def __and__(self, other: "GridSet") -> "GridSet":
        return set_algebra(self, other, "intersect")

    def __sub__(self, other: "GridSet") -> "GridSet":
        return set_algebra(self, other, "diff")

    def span(self) -> tuple[np.ndarray, np.ndarray]:
        """Bounding box of the member cells (closed cell extents)."""
        if self.is_empty:
            raise EmptySetError("span of an empty set")
        lo, hi = self.grid.cell_boxes(self.ids)
        return lo.min(axis=0), hi.max(axis=0)

    def __repr__(self) -> str:
        return f"GridSet({len(self)} of {self.grid.ncells} cells, shape={self.grid.shape})"


def _same_grid(a: GridSet, b: GridSet) -> None:
    if a.grid != b.grid:
        raise GridMismatchError("operands live on different grids")


def set_algebra(a: GridSet, b: GridSet, op: str) -> GridSet:
    _same_grid(a, b)
    if op == "union":
        bits = a.bits | b.bits
    elif op == "intersect":
        bits = a.bits & b.bits
    elif op == "diff":
        bits = a.bits & ~b.bits
    else:
        raise ValueError(f"unknown set operation {op!r}")
    return GridSet(a.grid, bits)


# ---------------------------------------------------------------------------
# Metric operations
# ---------------------------------------------------------------------------


def _sampling(grid: GridSpec) -> tuple[float, ...]:
    # array axes run (y, x); widths are stored (x, y)
    return tuple(float(w) for w in grid.widths[::-1])


def distance_to(a: GridSet) -> np.ndarray:
    """Exact Euclidean distance from every cell center to the nearest center of ``a``."""
    if a.is_empty:
        raise EmptySetError("distance to an empty set")
    d = ndimage.distance_transform_edt(~a.as_array(), sampling=_sampling(a.grid))
    return d.reshape(-1)


def dilate(a: GridSet, r: float) -> GridSet:
    """Masked cells whose center lies within ``r`` of some center of ``a``."""
    if r < 0:
        raise ValueError("dilation radius must be nonnegative")
    if r == 0 or a.is_empty:
        return a
    # only a window around the set's bounding box can be reached; the
    # transform runs on that window
    arr = a.as_array()
    pad = np.floor(r / np.asarray(_sampling(a.grid)) * (1 + 1e-12)).astype(int) + 1
    window = []
    for ax in range(arr.ndim):
        other = tuple(k for k in range(arr.ndim) if k != ax)
        hit = np.flatnonzero(arr.any(axis=other)) if other else np.flatnonzero(arr)
        window.append(slice(max(int(hit[0]) - pad[ax], 0), int(hit[-1]) + pad[ax] + 1))
    window = tuple(window)
    sub = ndimage.distance_transform_edt(~arr[window], sampling=_sampling(a.grid))
    out = np.zeros(arr.shape, dtype=bool)
    # relative slack absorbs rounding in the transform's square roots
    out[window] = sub <= r * (1 + 1e-12)
    return GridSet(a.grid, out.reshape(-1))


def hausdorff_distance(a: GridSet, b: GridSet) -> float:
    _same_grid(a, b)
    if a.is_empty or b.is_empty:
        raise EmptySetError("Hausdorff distance needs nonempty operands")
    da = distance_to(a)
    db = distance_to(b)
    return float(max(db[a.bits].max(), da[b.bits].max()))


def directed_distance(a: GridSet, b: GridSet) -> float:
    """sup over a of the distance to b."""
    _same_grid(a, b)
    return float(distance_to(b)[a.bits].max()) if not a.is_empty else 0.0


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

PGM_SET, PGM_FREE, PGM_MASKED = 0, 255, 200


def _fmt(v: float) -> str:
    return repr(float(v))


def grid_header(grid: GridSpec) -> str:
    tri = "none"
    if grid.domain.triangle is not None:
        tri = ";".join(f"{_fmt(x)},{_fmt(y)}" for x, y in grid.domain.triangle)
    return (
        f"dim={grid.dim} shape={','.join(map(str, grid.shape))} "
        f"lo={','.join(map(_fmt, grid.domain.lo))} hi={','.join(map(_fmt, grid.domain.hi))} "
        f"triangle={tri}"
    )


def parse_grid_header(text: str) -> GridSpec:
    fields = dict(re.findall(r"(\w+)=(\S+)", text))
    try:
        shape = tuple(int(v) for v in fields["shape"].split(","))
        lo = tuple(float(v) for v in fields["lo"].split(","))
        hi = tuple(float(v) for v in fields["hi"].split(","))
        tri = None
        if fields.get("triangle", "none") != "none":
            tri = tuple(tuple(float(c) for c in p.split(",")) for p in fields["triangle"].split(";"))
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"malformed grid header: {text!r}") from exc
    return GridSpec(Domain(lo, hi, tri), shape, cap=max(DEFAULT_CELL_CAP, math.prod(shape)))


def _raster(s: GridSet) -> np.ndarray:
    img = np.full(s.grid.ncells, PGM_FREE, dtype=np.uint8)
    img[~s.grid.mask] = PGM_MASKED
    img[s.bits] = PGM_SET
    img = img.reshape(s.grid.shape if s.grid.dim == 2 else (1, s.grid.ncells))
    return img[::-1]  # top row = largest y


def write_pgm(s: GridSet, path) -> None:
    img = _raster(s)
    h, w = img.shape
    header = f"P5\n# ifsdyn {grid_header(s.grid)}\n{w} {h}\n255\n".encode()
    Path(path).write_bytes(header + img.tobytes())


def read_pgm(path) -> GridSet:
    data = Path(path).read_bytes()
    buf = io.BytesIO(data)
    if buf.readline().strip() != b"P5":
        raise ConfigurationError(f"{path}: not a binary PGM")
    grid = None
    line = buf.readline()
    while line.startswith(b"#"):
        text = line.decode()
        if "ifsdyn" in text:
            grid = parse_grid_header(text)
        line = buf.readline()
    w, h = (int(v) for v in line.split())
    if int(buf.readline()) != 255:
        raise ConfigurationError(f"{path}: unsupported maxval")
    img = np.frombuffer(buf.read(w * h), dtype=np.uint8).reshape(h, w)[::-1]
    if grid is None:
        raise ConfigurationError(f"{path}: missing grid header comment")
    return GridSet(grid, (img == PGM_SET).reshape(-1))


def runs(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    padded = np.concatenate([[False], bits, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    starts, ends = edges[0::2], edges[1::2]
    return starts, ends - starts


def write_rle(s: GridSet, path) -> None:
    starts, lengths = runs(s.bits)
    lines = [f"RLE {grid_header(s.grid)} runs={len(starts)}"]
    lines += [f"{a} {n}" for a, n in zip(starts.tolist(), lengths.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_rle(path) -> GridSet:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("RLE "):
        raise ConfigurationError(f"{path}: not an RLE cell-set file")
    grid = parse_grid_header(text[0])
    bits = np.zeros(grid.ncells, dtype=bool)
    for line in text[1:]:
        if line.strip():
            a, n = (int(v) for v in line.split())
            bits[a : a + n] = True
    return GridSet(grid, bits)


def read_set(path) -> GridSet:
    """Load a cell set from either serialization, chosen by file content."""
    head = Path(path).read_bytes()[:4]
    return read_pgm(path) if head.startswith(b"P5") else read_rle(path)
