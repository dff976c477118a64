"""Random orbits ("chaos game") and bifurcation sweeps.

Random numbers
--------------
All randomness comes from SplitMix64 used as a counter-based generator, so
the k-th draw of a stream can be computed directly::

    z = seed + (k + 1) * 0x9E3779B97F4A7C15            (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9            (mod 2**64)
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB            (mod 2**64)
    z = z ^ (z >> 31)
    u = (z >> 11) * 2**-53                              in [0, 1)

Map ``i`` (0-based) is chosen at step ``k`` when ``u_k`` falls in the i-th
slot of the cumulative normalized weights. Non-uniform weights change how
often regions are visited, not which cells are reached in the long run.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import logistic2, tent2
from .errors import ConfigurationError
from .grid import GridSet, GridSpec
from .maps import Domain, IfsSystem, MapSpec, as_points

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
CHUNK = 1 << 16


def splitmix64(seed: int, counters: np.ndarray) -> np.ndarray:
    """SplitMix64 outputs for the given draw indices (vectorized)."""
    k = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + (k + np.uint64(1)) * GOLDEN
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def uniforms(seed: int, start: int, n: int) -> np.ndarray:
    z = splitmix64(seed, np.arange(start, start + n, dtype=np.uint64))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class OrbitConfig:
    start: tuple[float, ...] | float
    total: int = 1_000_000
    burn: int = 1_000
    seed: int = 0
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if not 0 <= self.burn < self.total:
            raise ConfigurationError("burn-in must be smaller than the total iteration count")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w <= 0) or not np.all(np.isfinite(w)):
                raise ConfigurationError("map weights must be positive")

    def cumulative(self, m: int) -> np.ndarray:
        w = np.ones(m) if self.weights is None else np.asarray(self.weights, dtype=float)
        if len(w) != m:
            raise ConfigurationError(f"{len(w)} weights for {m} maps")
        c = np.cumsum(w / w.sum())
        c[-1] = 1.0
        return c


@dataclass(frozen=True)
class OrbitResult:
    cells: GridSet
    iterations: int
    escaped: bool


def choices(cfg: OrbitConfig, m: int, start: int, n: int) -> np.ndarray:
    return np.searchsorted(cfg.cumulative(m), uniforms(cfg.seed, start, n), side="right")


def random_orbit(ifs: IfsSystem, cfg: OrbitConfig, grid: GridSpec) -> OrbitResult:
    """Cells visited by one random orbit after burn-in.

    The orbit stops early, with ``escaped`` set, if it leaves the domain.
    """
    if grid.domain != ifs.domain:
        raise ConfigurationError("grid and system domains differ")
    p0 = as_points(cfg.start, ifs.dim)
    if not ifs.domain.contains(p0).all():
        raise ConfigurationError(f"start point {cfg.start!r} is outside the domain")
    funcs = [m.point_function() for m in ifs.maps]
    x = float(p0[0, 0]) if ifs.dim == 1 else tuple(p0[0])
    bits = np.zeros(grid.ncells, dtype=bool)
    done, escaped = 0, False
    while done < cfg.total and not escaped:
        n = min(CHUNK, cfg.total - done)
        picks = choices(cfg, ifs.m, done, n).tolist()
        buf = np.empty((n, ifs.dim))
        for j, i in enumerate(picks):
            x = funcs[i](x)
            buf[j] = x
        ok = ifs.domain.contains(buf)
        if not ok.all():
            escaped = True
            n = int(np.argmin(ok))
            buf = buf[:n]
        keep = np.arange(done, done + n) >= cfg.burn
        if keep.any():
            bits[grid.cell_of_point(buf[keep])] = True
        done += n
    return OrbitResult(GridSet(grid, bits), done, escaped)


def orbit_tail_set(ifs: IfsSystem, cfg: OrbitConfig, grid: GridSpec) -> GridSet:
    """Estimate of the omega-limit set of ``cfg.start`` from its orbit tail."""
    return random_orbit(ifs, cfg, grid).cells


# ---------------------------------------------------------------------------
# Bifurcation sweeps
# ---------------------------------------------------------------------------

FAMILIES = {
    # name: (map kind, parameter bound, number of maps)
    "tent2_fixed_second": ("tent1d", 2.0, 2),
    "logistic2_fixed_second": ("logistic1d", 4.0, 2),
    "tent1": ("tent1d", 2.0, 1),
    "logistic1": ("logistic1d", 4.0, 1),
}


def family_system(family: str, param: float, second: float | None = None) -> IfsSystem:
    if family == "tent2_fixed_second":
        return tent2(param, second)
    if family == "logistic2_fixed_second":
        return logistic2(param, second)
    kind = FAMILIES[family][0]
    return IfsSystem((MapSpec(kind, (param,)),), Domain.interval(0, 1), family)


@dataclass(frozen=True)
class Sweep:
    family: str
    params: np.ndarray
    bins: GridSpec
    counts: np.ndarray  # (len(params), nbins) post burn-in hits
    threshold: int = 2

    @property
    def occupied(self) -> np.ndarray:
        return self.counts >= self.threshold

    def rows(self):
        edges = self.bins.lo[0] + np.arange(self.bins.ncells + 1) * self.bins.widths[0]
        for p, row in zip(self.params, self.counts):
            for b in np.flatnonzero(row >= self.threshold):
                yield float(p), float(edges[b]), float(edges[b + 1]), int(row[b])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["param", "bin_lo", "bin_hi", "count"])
        for p, a, b, c in self.rows():
            w.writerow([repr(p), repr(a), repr(b), c])
        return buf.getvalue()

    def write_pgm(self, path) -> None:
        img = np.where(self.occupied.T[::-1], 0, 255).astype(np.uint8)
        h, w = img.shape
        Path(path).write_bytes(f"P5\n# sweep {self.family}\n{w} {h}\n255\n".encode() + img.tobytes())


def _apply(kind: str, p: np.ndarray, x: np.ndarray) -> np.ndarray:
    if kind == "tent1d":
        return p * np.minimum(x, 1 - x)
    return p * x * (1 - x)


def bifurcation_sweep(
    family: str,
    param_range: tuple[float, float],
    steps: int,
    per_param: OrbitConfig,
    bins: GridSpec,
    second: float | None = None,
    threshold: int = 2,
) -> Sweep:
    """Orbit-tail histograms for evenly spaced parameters of a 1D family.

    All parameters advance in lockstep; parameter ``j`` draws its map choices
    from its own stream whose seed is the j-th SplitMix64 output of
    ``per_param.seed``.
    """
    if family not in FAMILIES:
        raise ConfigurationError(f"unknown family {family!r}; known: {sorted(FAMILIES)}")
    kind, bound, m = FAMILIES[family]
    lo, hi = map(float, param_range)
    if steps < 1 or (steps < 2 and lo != hi):
        raise ConfigurationError("a sweep needs at least 2 steps")
    if not (0 <= lo <= hi <= bound):
        raise ConfigurationError(f"parameter range {param_range} outside [0, {bound}]")
    if m == 2 and (second is None or not 0 <= second <= bound):
        raise ConfigurationError(f"family {family} needs a fixed second parameter in [0, {bound}]")
    if bins.dim != 1:
        raise ConfigurationError("bifurcation bins must form a 1D grid")
    params = np.array([lo]) if lo == hi else np.linspace(lo, hi, steps)
    seeds = splitmix64(per_param.seed, np.arange(len(params), dtype=np.uint64))
    x = np.full(len(params), float(np.ravel([per_param.start])[0]))
    counts = np.zeros((len(params), bins.ncells), dtype=np.int64)
    cum = per_param.cumulative(m)
    offsets = np.arange(len(params)) * bins.ncells
    sec = np.full(len(params), second if second is not None else 0.0)
    chunk = 4096
    for start in range(0, per_param.total, chunk):
        n = min(chunk, per_param.total - start)
        if m == 2:
            draws = np.stack([uniforms(int(s), start, n) for s in seeds])
            picks = np.searchsorted(cum, draws, side="right")
        for j in range(n):
            if m == 2:
                x = np.where(picks[:, j] == 0, _apply(kind, params, x), _apply(kind, sec, x))
            else:
                x = _apply(kind, params, x)
            if start + j >= per_param.burn:
                counts.ravel()[offsets + bins.cell_of_point(x)] += 1
    return Sweep(family, params, bins, counts, threshold)


def largest_gap(occupied: np.ndarray) -> tuple[int, int]:
    """Longest run of empty bins strictly inside the occupied hull: (start, length)."""
    idx = np.flatnonzero(occupied)
    if len(idx) < 2:
        return 0, 0
    jumps = np.diff(idx) - 1
    k = int(np.argmax(jumps))
    if jumps[k] == 0:
        return 0, 0
    return int(idx[k] + 1), int(jumps[k])


def tail_histogram(ifs: IfsSystem, cfg: OrbitConfig, bins: GridSpec) -> np.ndarray:
    """Per-bin hit counts of one 1D orbit after burn-in."""
    funcs = [m.point_function() for m in ifs.maps]
    x = float(np.ravel([cfg.start])[0])
    counts = np.zeros(bins.ncells, dtype=np.int64)
    done = 0
    while done < cfg.total:
        n = min(CHUNK, cfg.total - done)
        picks = choices(cfg, ifs.m, done, n).tolist()
        buf = np.empty(n)
        for j, i in enumerate(picks):
            x = funcs[i](x)
            buf[j] = x
        keep = np.arange(done, done + n) >= cfg.burn
        counts += np.bincount(bins.cell_of_point(buf[keep]), minlength=bins.ncells)
        done += n
    return counts
