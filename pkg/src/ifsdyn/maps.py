"""Maps, iterated function systems, index words and pointwise dynamics.

Points are always handled as float arrays of shape ``(n, dim)``; the scalar
helpers at the bottom of the module accept a bare float for 1D systems and a
pair for 2D systems.

Composition order: a word ``(i1, ..., ik)`` acts as ``f_i1 o ... o f_ik``, so
the *last* letter is applied first and ``eval_word(I + J, p)`` equals
``eval_word(I, eval_word(J, p))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateInputError,
    DomainViolationError,
    InvalidWordError,
)

SQRT3 = math.sqrt(3.0)

# Sampled Lipschitz estimates are inflated by this factor.
SAFETY_FACTOR = 1.25


def as_points(p, dim: int) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if dim == 1:
        return arr.reshape(-1, 1)
    return arr.reshape(-1, dim)


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box, optionally masked down to a triangle inside it."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    triangle: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or len(lo) not in (1, 2):
            raise ConfigurationError("domain must be a 1D interval or a 2D box")
        if any(b <= a for a, b in zip(lo, hi)):
            raise ConfigurationError(f"empty domain box {lo} .. {hi}")
        if self.triangle is not None:
            tri = tuple((float(x), float(y)) for x, y in self.triangle)
            if len(tri) != 3 or len(lo) != 2:
                raise ConfigurationError("triangle mask needs three 2D vertices")
            object.__setattr__(self, "triangle", tri)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @classmethod
    def interval(cls, a: float, b: float) -> "Domain":
        return cls((a,), (b,))

    @classmethod
    def box(cls, x0: float, y0: float, x1: float, y1: float) -> "Domain":
        return cls((x0, y0), (x1, y1))

    @classmethod
    def from_triangle(cls, vertices) -> "Domain":
        v = np.asarray(vertices, dtype=float)
        return cls(tuple(v.min(axis=0)), tuple(v.max(axis=0)), tuple(map(tuple, v)))

    def _edges(self):
        a, b, c = (np.asarray(v) for v in self.triangle)
        # orient counter-clockwise so inward normals point left of each edge
        if (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) < 0:
            b, c = c, b
        return [(a, b), (b, c), (c, a)]

    def contains(self, pts, tol: float = 1e-9) -> np.ndarray:
        pts = as_points(pts, self.dim)
        lo = np.asarray(self.lo) - tol
        hi = np.asarray(self.hi) + tol
        ok = np.all((pts >= lo) & (pts <= hi), axis=1)
        if self.triangle is not None:
            for a, b in self._edges():
                e = b - a
                cross = e[0] * (pts[:, 1] - a[1]) - e[1] * (pts[:, 0] - a[0])
                ok &= cross >= -tol * np.hypot(*e)
        return ok

    def project(self, pts) -> np.ndarray:
        """Closest point of the domain (nonexpansive retraction)."""
        pts = np.clip(as_points(pts, self.dim), self.lo, self.hi)
        if self.triangle is None:
            return pts
        inside = self.contains(pts, tol=0.0)
        if inside.all():
            return pts
        out = pts[~inside]
        best = None
        best_d = None
        for a, b in self._edges():
            e = b - a
            t = np.clip(((out - a) @ e) / (e @ e), 0.0, 1.0)
            q = a + t[:, None] * e
            d = np.sum((out - q) ** 2, axis=1)
            if best is None:
                best, best_d = q, d
            else:
                closer = d < best_d
                best[closer] = q[closer]
                best_d = np.where(closer, d, best_d)
        res = pts.copy()
        res[~inside] = best
        return res

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.triangle is None:
            return rng.uniform(self.lo, self.hi, size=(n, self.dim))
        a, b, c = (np.asarray(v) for v in self.triangle)
        u = rng.random(n)
        v = rng.random(n)
        su = np.sqrt(u)
        return (1 - su)[:, None] * a + (su * (1 - v))[:, None] * b + (su * v)[:, None] * c

    def corners(self) -> np.ndarray:
        if self.triangle is not None:
            return np.asarray(self.triangle)
        if self.dim == 1:
            return np.array([[self.lo[0]], [self.hi[0]]])
        (x0, y0), (x1, y1) = self.lo, self.hi
        return np.array([[x0, y0], [x1, y0], [x0, y1], [x1, y1]])

    def center(self) -> np.ndarray:
        if self.triangle is not None:
            return np.mean(self.triangle, axis=0)
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2


# ---------------------------------------------------------------------------
# Map kinds
# ---------------------------------------------------------------------------


def _spectral_norm2(m: np.ndarray) -> float:
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    # largest singular value of a 2x2 matrix in closed form
    s = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = max(s * s - 4 * det * det, 0.0)
    return math.sqrt((s + math.sqrt(disc)) / 2)


def _box_corners(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """(n, 4, 2) corners of n boxes."""
    return np.stack(
        [
            np.stack([lo[:, 0], lo[:, 1]], axis=1),
            np.stack([hi[:, 0], lo[:, 1]], axis=1),
            np.stack([lo[:, 0], hi[:, 1]], axis=1),
            np.stack([hi[:, 0], hi[:, 1]], axis=1),
        ],
        axis=1,
    )


def _radial_range(lo: np.ndarray, hi: np.ndarray, center) -> tuple[np.ndarray, np.ndarray]:
    c = np.asarray(center)
    gap = np.maximum(np.maximum(lo - c, c - hi), 0.0)
    rmin = np.hypot(gap[:, 0], gap[:, 1])
    far = np.maximum(np.abs(lo - c), np.abs(hi - c))
    rmax = np.hypot(far[:, 0], far[:, 1])
    return rmin, rmax


class _Kind:
    name: str
    dim: int
    nparams: int
    # analytic kinds give exact interval images on 1D cells
    has_interval_image = False
    sampled_lipschitz = False

    def check(self, params):
        pass

    def evaluate(self, params, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def lipschitz(self, params, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def interval_image(self, params, lo, hi):
        raise NotImplementedError

    def point_function(self, params) -> Callable:
        raise NotImplementedError

    def nonsmooth(self, params, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        return np.zeros(len(lo), dtype=bool)


class _Affine1D(_Kind):
    name, dim, nparams = "affine1d", 1, 2
    has_interval_image = True

    def evaluate(self, params, pts):
        a, b = params
        return a * pts + b

    def lipschitz(self, params, lo, hi):
        return np.full(len(lo), abs(params[0]))

    def interval_image(self, params, lo, hi):
        a, b = params
        u, v = a * lo + b, a * hi + b
        return np.minimum(u, v), np.maximum(u, v)

    def point_function(self, params):
        a, b = params
        return lambda x: a * x + b


class _Tent1D(_Kind):
    name, dim, nparams = "tent1d", 1, 1
    has_interval_image = True

    def evaluate(self, params, pts):
        (s,) = params
        return s * np.minimum(pts, 1.0 - pts)

    def lipschitz(self, params, lo, hi):
        return np.full(len(lo), abs(params[0]))

    def interval_image(self, params, lo, hi):
        (s,) = params
        u = s * np.minimum(lo, 1 - lo)
        v = s * np.minimum(hi, 1 - hi)
        top = np.where((lo < 0.5) & (hi > 0.5), s * 0.5, np.maximum(u, v))
        return np.minimum(u, v), top

    def point_function(self, params):
        (s,) = params
        return lambda x: s * (x if x < 1.0 - x else 1.0 - x)

    def nonsmooth(self, params, lo, hi):
        return (lo[:, 0] <= 0.5) & (hi[:, 0] >= 0.5)


class _Logistic1D(_Kind):
    name, dim, nparams = "logistic1d", 1, 1
    has_interval_image = True

    def evaluate(self, params, pts):
        (mu,) = params
        return mu * pts * (1.0 - pts)

    def lipschitz(self, params, lo, hi):
        (mu,) = params
        return np.maximum(np.abs(mu * (1 - 2 * lo[:, 0])), np.abs(mu * (1 - 2 * hi[:, 0])))

    def interval_image(self, params, lo, hi):
        (mu,) = params
        u = mu * lo * (1 - lo)
        v = mu * hi * (1 - hi)
        top = np.where((lo < 0.5) & (hi > 0.5), mu * 0.25, np.maximum(u, v))
        return np.minimum(u, v), top

    def point_function(self, params):
        (mu,) = params
        return lambda x: mu * x * (1.0 - x)


class _CubicFlow1D(_Kind):
    """Time-T map of x' = -(x - r1)(x - r2)(x - r3), fixed-step RK4.

    The discrete map is the object of study: it is monotone increasing for the
    step counts used here, so cell images are exact intervals.
    """

    name, dim, nparams = "cubic_flow1d", 1, 5
    has_interval_image = True
    sampled_lipschitz = True

    def check(self, params):
        if params[4] < 1 or params[4] != int(params[4]):
            raise ConfigurationError("cubic_flow1d needs a positive integer step count")
        if params[3] <= 0:
            raise ConfigurationError("cubic_flow1d needs a positive flow time")

    @staticmethod
    def _field(params):
        r1, r2, r3 = params[:3]
        return lambda x: -(x - r1) * (x - r2) * (x - r3)

    def evaluate(self, params, pts):
        f = self._field(params)
        steps = int(params[4])
        dt = params[3] / steps
        x = np.array(pts, dtype=float)
        for _ in range(steps):
            k1 = f(x)
            k2 = f(x + 0.5 * dt * k1)
            k3 = f(x + 0.5 * dt * k2)
            k4 = f(x + dt * k3)
            x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return x

    def lipschitz(self, params, lo, hi):
        return _sampled_lipschitz(lambda p: self.evaluate(params, p), lo, hi, 9)

    def interval_image(self, params, lo, hi):
        u = self.evaluate(params, lo)
        v = self.evaluate(params, hi)
        return np.minimum(u, v), np.maximum(u, v)

    def point_function(self, params):
        f = self._field(params)
        steps = int(params[4])
        dt = params[3] / steps

        def step(x):
            for _ in range(steps):
                k1 = f(x)
                k2 = f(x + 0.5 * dt * k1)
                k3 = f(x + 0.5 * dt * k2)
                k4 = f(x + dt * k3)
                x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            return x

        return step


class _Affine2D(_Kind):
    name, dim, nparams = "affine2d", 2, 6

    @staticmethod
    def matrix(params):
        a, b, c, d, _, _ = params
        return np.array([[a, b], [c, d]])

    def evaluate(self, params, pts):
        a, b, c, d, e, f = params
        x, y = pts[:, 0], pts[:, 1]
        return np.stack([a * x + b * y + e, c * x + d * y + f], axis=1)

    def lipschitz(self, params, lo, hi):
        return np.full(len(lo), _spectral_norm2(self.matrix(params)))

    def point_function(self, params):
        a, b, c, d, e, f = params
        return lambda p: (a * p[0] + b * p[1] + e, c * p[0] + d * p[1] + f)


class _Projective2D(_Kind):
    name, dim, nparams = "projective2d", 2, 9

    def evaluate(self, params, pts):
        h = np.asarray(params).reshape(3, 3)
        hom = pts @ h[:, :2].T + h[:, 2]
        return hom[:, :2] / hom[:, 2:3]

    def lipschitz(self, params, lo, hi):
        # Df = (M - f(x) w^T) / den  =>  |Df| <= (|M| + |w| max|f|) / min|den|
        h = np.asarray(params).reshape(3, 3)
        m, b = h[:2, :2], h[:2, 2]
        w, c = h[2, :2], h[2, 2]
        corners = _box_corners(lo, hi)
        den = corners @ w + c
        num = np.linalg.norm(corners @ m.T + b, axis=2)
        same_sign = (den.min(axis=1) > 0) | (den.max(axis=1) < 0)
        den_min = np.where(same_sign, np.abs(den).min(axis=1), 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            fmax = num.max(axis=1) / den_min
            bound = (_spectral_norm2(m) + np.linalg.norm(w) * fmax) / den_min
        return np.where(same_sign, bound, np.inf)

    def point_function(self, params):
        h = [float(v) for v in params]

        def f(p):
            x, y = p
            den = h[6] * x + h[7] * y + h[8]
            return ((h[0] * x + h[1] * y + h[2]) / den, (h[3] * x + h[4] * y + h[5]) / den)

        return f

    def nonsmooth(self, params, lo, hi):
        h = np.asarray(params).reshape(3, 3)
        den = _box_corners(lo, hi) @ h[2, :2] + h[2, 2]
        return ~((den.min(axis=1) > 0) | (den.max(axis=1) < 0))


class _RadialTent(_Kind):
    """(r, theta) -> (s min(1 - r, r), theta) about the center P."""

    name, dim, nparams = "radial_tent", 2, 3

    def evaluate(self, params, pts):
        s, px, py = params
        v = pts - (px, py)
        r = np.hypot(v[:, 0], v[:, 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(r > 0, s * np.minimum(1.0 - r, r) / np.where(r > 0, r, 1.0), s)
        return v * factor[:, None] + (px, py)

    def lipschitz(self, params, lo, hi):
        return np.full(len(lo), abs(params[0]))

    def point_function(self, params):
        s, px, py = params

        def f(p):
            vx, vy = p[0] - px, p[1] - py
            r = math.hypot(vx, vy)
            if r == 0.0:
                return (px, py)
            k = s * min(1.0 - r, r) / r
            return (px + k * vx, py + k * vy)

        return f

    def nonsmooth(self, params, lo, hi):
        rmin, rmax = _radial_range(lo, hi, params[1:])
        return (rmin <= 0.5) & (rmax >= 0.5)


class _RadialLogistic(_Kind):
    """(r, theta) -> (mu r (1 - r), theta) about the center P."""

    name, dim, nparams = "radial_logistic", 2, 3

    def evaluate(self, params, pts):
        mu, px, py = params
        v = pts - (px, py)
        r = np.hypot(v[:, 0], v[:, 1])
        return v * (mu * (1.0 - r))[:, None] + (px, py)

    def lipschitz(self, params, lo, hi):
        # radial derivative mu (1 - 2r), tangential stretch mu (1 - r)
        mu = abs(params[0])
        rmin, rmax = _radial_range(lo, hi, params[1:])
        return mu * np.maximum.reduce(
            [np.abs(1 - 2 * rmin), np.abs(1 - 2 * rmax), np.abs(1 - rmin), np.abs(1 - rmax)]
        )

    def point_function(self, params):
        mu, px, py = params

        def f(p):
            vx, vy = p[0] - px, p[1] - py
            k = mu * (1.0 - math.hypot(vx, vy))
            return (px + k * vx, py + k * vy)

        return f


_KINDS: dict[str, _Kind] = {
    k.name: k
    for k in (
        _Affine1D(),
        _Tent1D(),
        _Logistic1D(),
        _CubicFlow1D(),
        _Affine2D(),
        _Projective2D(),
        _RadialTent(),
        _RadialLogistic(),
    )
}

MAP_KINDS = tuple(_KINDS)


def _sampled_lipschitz(fn, lo: np.ndarray, hi: np.ndarray, samples: int) -> np.ndarray:
    """Max finite-difference ratio over sample pairs, times the safety factor."""
    n, dim = lo.shape
    if dim == 1:
        t = np.linspace(0.0, 1.0, samples)
        pts = lo[:, None, 0] + (hi - lo)[:, None, 0] * t[None, :]
        vals = fn(pts.reshape(-1, 1)).reshape(n, samples)
        # in 1D the steepest pair is always an adjacent one
        ratio = np.abs(np.diff(vals, axis=1)) / np.diff(pts, axis=1)
        return SAFETY_FACTOR * ratio.max(axis=1)
    k = max(2, int(math.ceil(math.sqrt(samples))))
    t = np.linspace(0.0, 1.0, k)
    gx, gy = np.meshgrid(t, t, indexing="xy")
    frac = np.stack([gx.ravel(), gy.ravel()], axis=1)
    pts = lo[:, None, :] + (hi - lo)[:, None, :] * frac[None, :, :]
    vals = fn(pts.reshape(-1, 2)).reshape(n, -1, 2)
    iu, ju = np.triu_indices(frac.shape[0], k=1)
    dp = np.linalg.norm(pts[:, iu] - pts[:, ju], axis=2)
    dv = np.linalg.norm(vals[:, iu] - vals[:, ju], axis=2)
    return SAFETY_FACTOR * (dv / dp).max(axis=1)


# ---------------------------------------------------------------------------
# MapSpec / IfsSystem / IndexWord
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MapSpec:
    kind: str
    params: tuple[float, ...]
    name: str = ""

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigurationError(f"unknown map kind {self.kind!r}; expected one of {MAP_KINDS}")
        params = tuple(float(v) for v in np.ravel(self.params))
        impl = _KINDS[self.kind]
        if len(params) != impl.nparams:
            raise ConfigurationError(
                f"{self.kind} takes {impl.nparams} parameters, got {len(params)}"
            )
        if not all(math.isfinite(v) for v in params):
            raise ConfigurationError(f"non-finite parameter in {self.kind} map")
        impl.check(params)
        object.__setattr__(self, "params", params)
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    @property
    def _impl(self) -> _Kind:
        return _KINDS[self.kind]

    @property
    def dim(self) -> int:
        return self._impl.dim

    @property
    def has_interval_image(self) -> bool:
        return self._impl.has_interval_image

    def __call__(self, pts) -> np.ndarray:
        return self._impl.evaluate(self.params, as_points(pts, self.dim))

    def lipschitz(self, lo, hi) -> np.ndarray:
        """Upper bound of the Lipschitz constant on each box ``[lo_k, hi_k]``."""
        lo = as_points(lo, self.dim)
        hi = as_points(hi, self.dim)
        return self._impl.lipschitz(self.params, lo, hi)

    def interval_image(self, lo, hi):
        return self._impl.interval_image(self.params, np.asarray(lo, float), np.asarray(hi, float))

    def point_function(self) -> Callable:
        """Fast scalar evaluator used by orbit loops (float in 1D, pair in 2D)."""
        return self._impl.point_function(self.params)

    def nonsmooth(self, lo, hi) -> np.ndarray:
        return self._impl.nonsmooth(self.params, as_points(lo, self.dim), as_points(hi, self.dim))

    @classmethod
    def homothety(cls, center, ratio: float = 0.5, name: str = "") -> "MapSpec":
        cx, cy = center
        return cls("affine2d", (ratio, 0, 0, ratio, (1 - ratio) * cx, (1 - ratio) * cy), name)


@dataclass(frozen=True)
class IfsSystem:
    maps: tuple[MapSpec, ...]
    domain: Domain
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        maps = tuple(self.maps)
        object.__setattr__(self, "maps", maps)
        if len(maps) < 1:
            raise ConfigurationError("an IFS needs at least one map")
        for m in maps:
            if m.dim != self.domain.dim:
                raise ConfigurationError(
                    f"map {m.name} is {m.dim}D but the domain is {self.domain.dim}D"
                )

    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def dim(self) -> int:
        return self.domain.dim

    def validate(self, samples: int = 10_000, seed: int = 0, tol: float = 1e-9) -> None:
        """Check by sampling that every generator maps the domain into itself."""
        rng = np.random.default_rng(seed)
        pts = np.concatenate([self.domain.sample(samples, rng), self.domain.corners()])
        for m in self.maps:
            img = m(pts)
            bad = ~self.domain.contains(img, tol=tol)
            if bad.any():
                k = int(np.argmax(bad))
                raise ConfigurationError(
                    f"map {m.name} sends {tuple(pts[k])} to {tuple(img[k])}, outside the domain"
                )


class IndexWord(tuple):
    """Finite word over the map indices 1..m; the empty word is the identity."""

    def __new__(cls, letters: Iterable[int] = ()):
        return super().__new__(cls, (int(i) for i in letters))

    def __add__(self, other) -> "IndexWord":
        return IndexWord(tuple(self) + tuple(other))

    def __repr__(self) -> str:
        return f"IndexWord({tuple(self)!r})"


# ---------------------------------------------------------------------------
# Pointwise operations
# ---------------------------------------------------------------------------


def _unwrap(point: np.ndarray, dim: int):
    if dim == 1:
        return float(point[0, 0])
    return np.asarray(point[0])


def eval_map(fmap: MapSpec, p, domain: Domain | None = None):
    """Evaluate one map at one point, optionally checking the domain first."""
    pts = as_points(p, fmap.dim)
    if domain is not None and not domain.contains(pts).all():
        raise DomainViolationError(fmap.name, p)
    return _unwrap(fmap(pts), fmap.dim)


def eval_word(ifs: IfsSystem, word: Sequence[int], p):
    """Apply ``f_i1 o ... o f_ik`` to ``p`` (last letter first)."""
    for letter in word:
        if not 1 <= int(letter) <= ifs.m:
            raise InvalidWordError(f"letter {letter} is outside 1..{ifs.m}")
    pts = as_points(p, ifs.dim)
    for letter in reversed(tuple(word)):
        pts = ifs.maps[int(letter) - 1](pts)
    return _unwrap(pts, ifs.dim)


def expansion_estimate(fmap: MapSpec, box, samples: int = 16) -> float:
    """Upper estimate of the local Lipschitz constant of ``fmap`` on ``box``.

    ``box`` is ``(lo, hi)`` with ``lo``/``hi`` scalars in 1D or pairs in 2D.
    Closed forms are used wherever the derivative is known; maps without one
    fall back to sampled finite differences inflated by ``SAFETY_FACTOR``.
    """
    if samples < 4:
        raise ValueError("expansion_estimate needs at least 4 samples")
    lo = as_points(box[0], fmap.dim)
    hi = as_points(box[1], fmap.dim)
    if np.any(hi <= lo):
        raise DegenerateInputError(f"degenerate box {box!r}")
    if fmap._impl.sampled_lipschitz:
        return float(_sampled_lipschitz(fmap, lo, hi, samples)[0])
    return float(fmap.lipschitz(lo, hi)[0])


def fd_jacobian(fmap: MapSpec, pts: np.ndarray, step: float) -> np.ndarray:
    """Central finite-difference Jacobians, shape (n, 2, 2)."""
    pts = as_points(pts, 2)
    ex = np.array([step, 0.0])
    ey = np.array([0.0, step])
    dx = (fmap(pts + ex) - fmap(pts - ex)) / (2 * step)
    dy = (fmap(pts + ey) - fmap(pts - ey)) / (2 * step)
    return np.stack([dx, dy], axis=2)


def operator_norms(jac: np.ndarray) -> np.ndarray:
    a, b = jac[:, 0, 0], jac[:, 0, 1]
    c, d = jac[:, 1, 0], jac[:, 1, 1]
    s = a * a + b * b + c * c + d * d
    det = a * d - b * c
    return np.sqrt((s + np.sqrt(np.maximum(s * s - 4 * det * det, 0.0))) / 2)


class JacobianScan(NamedTuple):
    max_norm: float
    argmax_cell: int
    near_unit_cells: np.ndarray
    skipped_cells: np.ndarray


def jacobian_norm_scan(fmap: MapSpec, grid, fd_step: float = 1e-6, near_tol: float = 1e-3) -> JacobianScan:
    """Operator norm of the finite-difference Jacobian at every cell center.

    Cells whose box meets a known non-smooth locus of the map (a tent crease,
    a projective pole) or whose evaluation fails are skipped and reported.
    """
    if fmap.dim != 2:
        raise ConfigurationError("jacobian_norm_scan works on 2D maps")
    if fd_step <= 0 or fd_step >= min(grid.widths):
        raise ValueError("fd_step must be positive and smaller than the cell width")
    ids = np.flatnonzero(grid.mask)
    centers = grid.centers(ids)
    inside = grid.domain.contains(centers, tol=0.0)
    ids, centers = ids[inside], centers[inside]
    lo, hi = grid.cell_boxes(ids)
    skip = fmap.nonsmooth(lo, hi)
    with np.errstate(all="ignore"):
        norms = operator_norms(fd_jacobian(fmap, centers, fd_step))
    skip |= ~np.isfinite(norms)
    good = ~skip
    if not good.any():
        return JacobianScan(float("nan"), -1, ids[:0], ids[skip])
    k = int(np.argmax(np.where(good, norms, -np.inf)))
    near = good & (norms >= 1.0 - near_tol)
    return JacobianScan(float(norms[k]), int(ids[k]), ids[near], ids[skip])
