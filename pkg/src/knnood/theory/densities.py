"""Synthetic densities whose smoothness and boundary constants are known exactly.

Families:

``triangular-1d``
    ``f(x) = 4 min(x, 1 - x)`` on ``[0, 1]``. Lipschitz with constant 4 and
    ``P(f(X) <= t) = t^2 / 4`` for ``t <= 2``, so ``C_eta = 1/2`` at ``eta = 1``.
``uniform-ball``, ``uniform-box``
    Constant ``1 / vol`` on a convex support; density is bounded below, but
    jumps at the boundary, so no Holder constant on all of R^d.
``taper-box``
    Product of tent densities, one per axis, on a box. Continuous and
    Lipschitz, zero on the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import betainc

from ..errors import InvalidParameter
from ..knn import unit_ball_volume
from .geometry import Ball, Box

FAMILIES = ("triangular-1d", "uniform-ball", "uniform-box", "taper-box")


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox stream; identical draws for identical seeds on any platform."""
    if seed < 0:
        raise InvalidParameter(f"seed must be nonnegative, got {seed}")
    return np.random.Generator(np.random.Philox(int(seed)))


def _rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return make_rng(seed_or_rng)


def _tent_inverse_cdf(u):
    return np.where(u <= 0.5, np.sqrt(u / 2.0), 1.0 - np.sqrt((1.0 - u) / 2.0))


def _tent_cdf(x):
    x = np.clip(x, 0.0, 1.0)
    return np.where(x <= 0.5, 2.0 * x * x, 1.0 - 2.0 * (1.0 - x) ** 2)


@dataclass(frozen=True, eq=False)
class SyntheticDensity:
    family: str
    support: Ball | Box
    holder_constant: float | None = None  # C_beta
    holder_exponent: float | None = None  # beta
    boundary_constant: float | None = None  # C_eta
    boundary_exponent: float | None = None  # eta
    density_floor: float | None = None  # lambda_0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameter(f"unknown density family {self.family!r}")
        if self.d <= 3:
            mass = self._numeric_total_mass()
            if abs(mass - 1.0) > 1e-3:
                raise InvalidParameter(f"{self.family} integrates to {mass}, not 1")

    # constructors

    @classmethod
    def triangular_1d(cls) -> "SyntheticDensity":
        return cls(
            "triangular-1d",
            Box([0.0], [1.0]),
            holder_constant=4.0,
            holder_exponent=1.0,
            boundary_constant=0.5,
            boundary_exponent=1.0,
        )

    @classmethod
    def uniform_ball(cls, d: int = 2, center=None, radius: float = 1.0) -> "SyntheticDensity":
        center = np.zeros(d) if center is None else center
        ball = Ball(center, radius)
        vol = unit_ball_volume(ball.d) * radius**ball.d
        return cls(
            "uniform-ball", ball, boundary_constant=vol, boundary_exponent=1.0, density_floor=1.0 / vol
        )

    @classmethod
    def uniform_box(cls, lo=(0.0, 0.0), hi=(1.0, 1.0)) -> "SyntheticDensity":
        box = Box(lo, hi)
        vol = float(np.prod(box.hi - box.lo))
        return cls(
            "uniform-box", box, boundary_constant=vol, boundary_exponent=1.0, density_floor=1.0 / vol
        )

    @classmethod
    def taper_box(cls, lo=(0.0, 0.0), hi=(1.0, 1.0)) -> "SyntheticDensity":
        box = Box(lo, hi)
        e = box.hi - box.lo
        peaks = 2.0 / e
        slopes = 4.0 / e**2
        # sup of the gradient norm over the pieces where f is linear per axis
        grads = np.array([slopes[i] * np.prod(np.delete(peaks, i)) for i in range(box.d)])
        c_eta = float(e[0] / 2.0) if box.d == 1 else None
        return cls(
            "taper-box",
            box,
            holder_constant=float(np.linalg.norm(grads)),
            holder_exponent=1.0,
            boundary_constant=c_eta,
            boundary_exponent=1.0 if c_eta is not None else None,
        )

    @classmethod
    def from_name(cls, family: str, d: int = 2) -> "SyntheticDensity":
        """Default instance of a family: unit interval, unit ball, or unit cube."""
        if family == "triangular-1d":
            return cls.triangular_1d()
        if family == "uniform-ball":
            return cls.uniform_ball(d)
        if family == "uniform-box":
            return cls.uniform_box(np.zeros(d), np.ones(d))
        if family == "taper-box":
            return cls.taper_box(np.zeros(d), np.ones(d))
        raise InvalidParameter(f"unknown density family {family!r}")

    # basic properties

    @property
    def d(self) -> int:
        return self.support.d

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.support.bounds

    @property
    def peak(self) -> float:
        """Maximum of the density."""
        if self.family == "triangular-1d":
            return 2.0
        if self.family == "taper-box":
            return float(np.prod(2.0 / (self.support.hi - self.support.lo)))
        return self.density_floor

    @property
    def mode(self) -> np.ndarray:
        return self.support.center.copy()

    def _as_points(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 0:
            x = x.reshape(1, 1)
        elif x.ndim == 1:
            x = x.reshape(-1, 1) if self.d == 1 else x.reshape(1, -1)
        return x

    def density_value(self, x) -> np.ndarray:
        """Closed-form density; zero outside the support."""
        scalar = np.ndim(x) == 0 or (np.ndim(x) == 1 and self.d > 1)
        pts = self._as_points(x)
        if self.family == "triangular-1d":
            t = pts[:, 0]
            f = np.where((t >= 0.0) & (t <= 1.0), 4.0 * np.minimum(t, 1.0 - t), 0.0)
        elif self.family == "taper-box":
            box = self.support
            u = (pts - box.lo) / (box.hi - box.lo)
            per_axis = (4.0 / (box.hi - box.lo)) * np.minimum(u, 1.0 - u)
            f = np.where(box.contains(pts), np.prod(np.maximum(per_axis, 0.0), axis=1), 0.0)
        else:
            f = np.where(self.support.contains(pts), self.density_floor, 0.0)
        return float(f[0]) if scalar else f

    def sample(self, n: int, seed_or_rng) -> np.ndarray:
        """``n`` i.i.d. draws as an ``(n, d)`` array."""
        rng = _rng(seed_or_rng)
        if n < 1:
            raise InvalidParameter(f"sample size must be >= 1, got {n}")
        if self.family in ("triangular-1d", "taper-box"):
            box = self.support
            return box.lo + (box.hi - box.lo) * _tent_inverse_cdf(rng.random((n, self.d)))
        if self.family == "uniform-box":
            box = self.support
            return box.lo + (box.hi - box.lo) * rng.random((n, self.d))
        ball = self.support
        direction = rng.standard_normal((n, self.d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = ball.radius * rng.random(n) ** (1.0 / self.d)
        return ball.center + radius[:, None] * direction

    def sample_outside(self, m: int, lo: float, hi: float, seed_or_rng) -> np.ndarray:
        """``m`` points at distance uniform on ``[lo, hi]`` from the support."""
        return self.support.sample_outside(m, lo, hi, _rng(seed_or_rng))

    # masses

    def ball_mass(self, center, radius: float) -> float:
        """Exact probability of the closed ball ``B(center, radius)``."""
        c = np.atleast_1d(np.asarray(center, dtype=np.float64))
        if radius <= 0:
            return 0.0
        if self.d == 1 and isinstance(self.support, Box):
            a, b = c[0] - radius, c[0] + radius
            lo, hi = self.support.lo[0], self.support.hi[0]
            if self.family == "uniform-box":
                return max(0.0, min(b, hi) - max(a, lo)) / (hi - lo)
            ua, ub = (a - lo) / (hi - lo), (b - lo) / (hi - lo)
            return float(_tent_cdf(ub) - _tent_cdf(ua))
        if self.family == "uniform-ball":
            ball = self.support
            dist = float(np.linalg.norm(c - ball.center))
            vol = unit_ball_volume(self.d) * ball.radius**self.d
            return ball_intersection_volume(ball.radius, radius, dist, self.d) / vol
        if self.family == "uniform-box" and self.d == 2:
            box = self.support
            area = disk_rectangle_area(c[0], c[1], radius, box.lo[0], box.hi[0], box.lo[1], box.hi[1])
            return area / float(np.prod(box.hi - box.lo))
        raise InvalidParameter(f"no closed-form ball mass for {self.family} in d={self.d}")

    def _numeric_total_mass(self) -> float:
        lo, hi = self.bounds
        if self.d == 1:
            f = lambda t: float(self.density_value(t))
            mid = 0.5 * (lo[0] + hi[0])
            return integrate.quad(f, lo[0], hi[0], points=[mid], limit=200)[0]
        m = 400 if self.d == 2 else 80
        axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(m) + 0.5) / m for i in range(self.d)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d)
        cell = float(np.prod((hi - lo) / m))
        return float(self.density_value(grid).sum() * cell)


def sample_density(sd: SyntheticDensity, n: int, seed: int) -> np.ndarray:
    return sd.sample(n, make_rng(seed))


def cap_volume(radius: float, height: float, d: int) -> float:
    """Volume of the cap of height ``height`` cut from a d-ball of radius ``radius``."""
    h = min(max(height, 0.0), 2.0 * radius)
    full = unit_ball_volume(d) * radius**d
    if h > radius:
        return full - cap_volume(radius, 2.0 * radius - h, d)
    x = (2.0 * radius * h - h * h) / (radius * radius)
    return 0.5 * full * float(betainc(0.5 * (d + 1), 0.5, x))


def ball_intersection_volume(r1: float, r2: float, dist: float, d: int) -> float:
    """Volume of the intersection of two d-balls with radii r1, r2 at center distance ``dist``."""
    if dist >= r1 + r2:
        return 0.0
    if dist <= abs(r1 - r2):
        return unit_ball_volume(d) * min(r1, r2) ** d
    # distance from the first center to the radical hyperplane
    a = (dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist)
    return cap_volume(r1, r1 - a, d) + cap_volume(r2, r2 - (dist - a), d)


def _chord_integral(r, u):
    """Antiderivative of sqrt(r^2 - u^2)."""
    u = min(max(u, -r), r)
    return 0.5 * (u * math.sqrt(max(r * r - u * u, 0.0)) + r * r * math.asin(u / r))


def disk_rectangle_area(cx, cy, r, x0, x1, y0, y1) -> float:
    """Area of the disk ``B((cx, cy), r)`` intersected with ``[x0, x1] x [y0, y1]``.

    Integrates the clipped vertical chord length in closed form, piece by
    piece between the abscissas where the chord meets a horizontal edge.
    """
    a, b = max(x0 - cx, -r), min(x1 - cx, r)
    if a >= b:
        return 0.0
    cuts = {a, b}
    for h in (abs(y1 - cy), abs(y0 - cy)):
        if h < r:
            w = math.sqrt(r * r - h * h)
            cuts.update(u for u in (-w, w) if a < u < b)
    cuts = sorted(cuts)
    area = 0.0
    for u0, u1 in zip(cuts[:-1], cuts[1:]):
        um = 0.5 * (u0 + u1)
        s = math.sqrt(max(r * r - um * um, 0.0))
        top_is_chord = cy + s < y1
        bottom_is_chord = cy - s > y0
        top = cy + s if top_is_chord else y1
        bottom = cy - s if bottom_is_chord else y0
        if top <= bottom:
            continue
        const = (0.0 if top_is_chord else y1 - cy) - (0.0 if bottom_is_chord else y0 - cy)
        chord_weight = int(top_is_chord) + int(bottom_is_chord)
        area += const * (u1 - u0) + chord_weight * (_chord_integral(r, u1) - _chord_integral(r, u0))
    return area
