"""Convex supports (balls, boxes), Euclidean projection, and the contraction map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InteriorPoint, InvalidParameter


def _rows(x, d):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim <= 1
    x = x.reshape(1, d) if single else x
    if x.shape[1] != d:
        raise InvalidParameter(f"points have dimension {x.shape[1]}, support has {d}")
    return x, single


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=np.float64)))
        if not self.radius > 0:
            raise InvalidParameter(f"ball radius must be positive, got {self.radius}")

    @property
    def d(self) -> int:
        return self.center.size

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.center - self.radius, self.center + self.radius

    def contains(self, x) -> np.ndarray:
        x, single = _rows(x, self.d)
        inside = np.linalg.norm(x - self.center, axis=1) <= self.radius
        return inside[0] if single else inside

    def distance(self, x) -> np.ndarray:
        x, single = _rows(x, self.d)
        dist = np.maximum(np.linalg.norm(x - self.center, axis=1) - self.radius, 0.0)
        return dist[0] if single else dist

    def _project(self, x):
        offset = x - self.center
        norm = np.linalg.norm(offset, axis=1, keepdims=True)
        return self.center + self.radius * offset / norm

    def sample_outside(self, m: int, lo: float, hi: float, rng) -> np.ndarray:
        """``m`` points whose distance to the ball is uniform on ``[lo, hi]``."""
        direction = rng.standard_normal((m, self.d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        margin = rng.uniform(lo, hi, size=m)
        return self.center + (self.radius + margin)[:, None] * direction


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=np.float64))
        if lo.shape != hi.shape or not np.all(hi > lo):
            raise InvalidParameter(f"box needs lo < hi componentwise, got {lo}, {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self) -> int:
        return self.lo.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lo, self.hi

    def contains(self, x) -> np.ndarray:
        x, single = _rows(x, self.d)
        inside = np.all((x >= self.lo) & (x <= self.hi), axis=1)
        return inside[0] if single else inside

    def distance(self, x) -> np.ndarray:
        x, single = _rows(x, self.d)
        dist = np.linalg.norm(x - np.clip(x, self.lo, self.hi), axis=1)
        return dist[0] if single else dist

    def _project(self, x):
        return np.clip(x, self.lo, self.hi)

    def sample_outside(self, m: int, lo: float, hi: float, rng) -> np.ndarray:
        """Push one coordinate of a uniform interior point past a face.

        The other coordinates stay inside, so the distance to the box is
        exactly the push, drawn uniform on ``[lo, hi]``.
        """
        x = self.lo + (self.hi - self.lo) * rng.random((m, self.d))
        axis = rng.integers(0, self.d, size=m)
        upper = rng.random(m) < 0.5
        margin = rng.uniform(lo, hi, size=m)
        rows = np.arange(m)
        x[rows, axis] = np.where(upper, self.hi[axis] + margin, self.lo[axis] - margin)
        return x


def project_convex(support, x) -> np.ndarray:
    """Nearest point of ``support`` to an exterior point ``x``."""
    pts, single = _rows(x, support.d)
    if np.any(support.contains(pts)):
        raise InteriorPoint("projection is defined for points outside the support")
    p = support._project(pts)
    return p[0] if single else p


def contraction_map(support, x0, gamma_in: float, gamma_out: float, x) -> np.ndarray:
    """Contract toward ``x0`` by ``gamma_in`` inside, toward the boundary by ``gamma_out`` outside.

    Inside: ``x0 + gamma_in * (x - x0)``. Outside: ``p + gamma_out * (x - p)``
    with ``p`` the projection of ``x`` onto the support.
    """
    pts, single = _rows(x, support.d)
    x0 = np.asarray(x0, dtype=np.float64).reshape(1, -1)
    inside = support.contains(pts)
    out = np.empty_like(pts)
    out[inside] = x0 + gamma_in * (pts[inside] - x0)
    if not np.all(inside):
        p = support._project(pts[~inside])
        out[~inside] = p + gamma_out * (pts[~inside] - p)
    return out[0] if single else out
