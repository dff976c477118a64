"""Builtin example systems and their standard trapping regions."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError
from .grid import GridSet, GridSpec
from .maps import SQRT3, Domain, IfsSystem, MapSpec

A = (0.0, 0.0)
B = (1.0, 0.0)
C = (0.5, SQRT3 / 2)
VERTICES = {"A": A, "B": B, "C": C}
TRIANGLE = Domain.from_triangle([A, B, C])
SIERPINSKI_BOX = Domain.box(-0.2, -0.2, 1.2, 1.2)
BARYCENTER = (0.5, SQRT3 / 6)
# the disc trap contains the triangle (vertex distance 1/sqrt(3) ~ 0.577) and
# each homothety maps it to a disc of radius 0.31 within 0.289 of the barycenter
DISC_RADIUS = 0.62

_R3 = 1 / SQRT3
LY_MATRICES = {
    "c_A": ((1, 0, 0), (0, 1, 0), (1, _R3, 1)),
    "c_B": ((0, _R3, 1), (0, 1, 0), (-1, _R3, 2)),
    "c_C": ((-2, 2 * _R3, -1), (0, 0, -SQRT3), (0, 4 * _R3, -4)),
}


def sierpinski_maps() -> list[MapSpec]:
    return [MapSpec.homothety(p, 0.5, f"s_{k}") for k, p in VERTICES.items()]


def sierpinski() -> IfsSystem:
    return IfsSystem(tuple(sierpinski_maps()), SIERPINSKI_BOX, "sierpinski")


def tent2(s: float = 1.9, s2: float = 1.5) -> IfsSystem:
    maps = (MapSpec("tent1d", (s,), f"t_{s:g}"), MapSpec("tent1d", (s2,), f"t_{s2:g}"))
    return IfsSystem(maps, Domain.interval(0, 1), "tent2", {"s": s, "s2": s2})


def logistic2(mu: float = 3.0, mu2: float = 2.0) -> IfsSystem:
    maps = (
        MapSpec("logistic1d", (mu,), f"l_{mu:g}"),
        MapSpec("logistic1d", (mu2,), f"l_{mu2:g}"),
    )
    return IfsSystem(maps, Domain.interval(0, 1), "logistic2", {"mu": mu, "mu2": mu2})


def levitt_yoccoz() -> IfsSystem:
    maps = tuple(MapSpec("projective2d", np.ravel(m), k) for k, m in LY_MATRICES.items())
    return IfsSystem(maps, TRIANGLE, "levitt_yoccoz")


def tent_sierpinski(s: float = 1.0) -> IfsSystem:
    s_a, s_b, _ = sierpinski_maps()
    maps = (s_a, s_b, MapSpec("radial_tent", (s, *C), "t_C"))
    return IfsSystem(maps, TRIANGLE, "tent_sierpinski", {"s": s})


def logistic_sierpinski(mu: float = 2.0) -> IfsSystem:
    s_a, s_b, _ = sierpinski_maps()
    maps = (s_a, s_b, MapSpec("radial_logistic", (mu, *C), "l_C"))
    return IfsSystem(maps, TRIANGLE, "logistic_sierpinski", {"mu": mu})


def logistic_triangle(mu: float = 3.0) -> IfsSystem:
    maps = tuple(MapSpec("radial_logistic", (mu, *p), f"l_{k}") for k, p in VERTICES.items())
    return IfsSystem(maps, TRIANGLE, "logistic_triangle", {"mu": mu})


def buffer_zone(time: float = 1.0, steps: int = 64) -> IfsSystem:
    """Two time-T flow maps on [0, 3] sharing the attracting ends 0 and 3.

    Map 1 has its repelling point at 1, map 2 at 2; points of [1, 2] are
    pushed up by the first map and down by the second.
    """
    maps = (
        MapSpec("cubic_flow1d", (0.0, 1.0, 3.0, time, steps), "phi_1"),
        MapSpec("cubic_flow1d", (0.0, 2.0, 3.0, time, steps), "phi_2"),
    )
    return IfsSystem(maps, Domain.interval(0, 3), "buffer_zone", {"time": time, "steps": steps})


def identity(dim: int = 2) -> IfsSystem:
    if dim == 1:
        return IfsSystem((MapSpec("affine1d", (1, 0), "id"),), Domain.interval(0, 1), "identity")
    return IfsSystem((MapSpec("affine2d", (1, 0, 0, 1, 0, 0), "id"),), Domain.box(0, 0, 1, 1), "identity")


def halving(dim: int = 1) -> IfsSystem:
    """Single contraction toward the origin."""
    if dim == 1:
        return IfsSystem((MapSpec("affine1d", (0.5, 0), "half"),), Domain.interval(0, 1), "halving")
    return IfsSystem((MapSpec.homothety((0, 0), 0.5, "half"),), Domain.box(0, 0, 1, 1), "halving")


@dataclass(frozen=True)
class CatalogEntry:
    factory: Callable[..., IfsSystem]
    params: dict


CATALOG: dict[str, CatalogEntry] = {
    "sierpinski": CatalogEntry(sierpinski, {}),
    "tent2": CatalogEntry(tent2, {"s": 1.9, "s2": 1.5}),
    "logistic2": CatalogEntry(logistic2, {"mu": 3.0, "mu2": 2.0}),
    "levitt_yoccoz": CatalogEntry(levitt_yoccoz, {}),
    "tent_sierpinski": CatalogEntry(tent_sierpinski, {"s": 1.0}),
    "logistic_sierpinski": CatalogEntry(logistic_sierpinski, {"mu": 2.0}),
    "logistic_triangle": CatalogEntry(logistic_triangle, {"mu": 3.0}),
    "buffer_zone": CatalogEntry(buffer_zone, {"time": 1.0, "steps": 64}),
    "identity": CatalogEntry(identity, {"dim": 2}),
    "halving": CatalogEntry(halving, {"dim": 1}),
}


def build_system(name: str, validate: bool = True, **params) -> IfsSystem:
    """Instantiate a catalog system; unknown parameters are a configuration error."""
    try:
        entry = CATALOG[name]
    except KeyError:
        raise ConfigurationError(f"unknown system {name!r}; known: {sorted(CATALOG)}") from None
    extra = set(params) - set(entry.params)
    if extra:
        raise ConfigurationError(f"system {name!r} takes no parameter(s) {sorted(extra)}")
    kw = {**entry.params, **{k: v for k, v in params.items() if v is not None}}
    if "dim" in kw:
        kw["dim"] = int(kw["dim"])
    if "steps" in kw:
        kw["steps"] = int(kw["steps"])
    ifs = entry.factory(**kw)
    if validate:
        ifs.validate()
    return ifs


def default_grid(ifs: IfsSystem, res: int) -> GridSpec:
    return GridSpec.uniform(ifs.domain, res)


# ---------------------------------------------------------------------------
# Trapping regions
# ---------------------------------------------------------------------------


def disc_region(grid: GridSpec, center=BARYCENTER, radius: float = DISC_RADIUS) -> GridSet:
    c = np.asarray(center)
    return GridSet.from_predicate(grid, lambda p: np.hypot(*(p - c).T) <= radius)


def vertex_distance_region(grid: GridSpec, eps: float) -> GridSet:
    """Cells of the triangle whose center is at least ``eps`` from every vertex."""
    verts = np.asarray(list(VERTICES.values()))

    def pred(p):
        d = np.min(np.linalg.norm(p[:, None, :] - verts[None], axis=2), axis=1)
        return d >= eps

    return GridSet.from_predicate(grid, pred)


_Q_EPS = re.compile(r"^q(\d*\.?\d+)$")


def named_region(name: str, grid: GridSpec) -> GridSet:
    """``domain``, ``disc`` or ``q<eps>`` (e.g. ``q0.1``)."""
    if name == "domain":
        return GridSet.full(grid)
    if name == "disc":
        if grid.dim != 2:
            raise ConfigurationError("the disc region needs a 2D grid")
        return disc_region(grid)
    m = _Q_EPS.match(name)
    if m:
        if grid.domain.triangle is None:
            raise ConfigurationError("q<eps> regions are defined on the triangle")
        return vertex_distance_region(grid, float(m.group(1)))
    raise ConfigurationError(f"unknown region {name!r}")


def q_eps_bound(mu: float) -> float:
    """Largest eps for which the vertex-distance region traps the logistic triangle."""
    if not 2 < mu <= 2 * SQRT3:
        raise ConfigurationError("the vertex-distance trap needs 2 < mu <= 2 sqrt 3")
    return min(1 - mu / 4, (mu - 2) / 5)


def tent_landmarks(s: float, s2: float) -> dict[str, float]:
    """Key abscissae of the two-tent system: the node A = [ell, c1] and c2."""
    return {"ell": s2 * (1 - s / 2), "c1": s / 2, "c2": s - s * s / 2}

