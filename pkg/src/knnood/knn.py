"""Exact k-NN radius queries under Euclidean distance.

The k-NN radius ``r_k(x; X)`` is the k-th smallest distance from ``x`` to the
points of ``X`` (closed balls: a point at exactly the radius counts). Two
strategies answer it: a chunked brute-force scan and a kd-tree. Both report
distances computed by the same routine, so they agree to the last few ulps.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DimensionMismatch, EmptyPointSet, KTooLarge, ZeroRadius
from .tensor_io import EmbeddingMatrix

LEAF_SIZE = 32
AUTO_KDTREE_MAX_DIM = 16
_CHUNK_ELEMENTS = 1 << 22

STRATEGIES = ("auto", "brute", "kdtree")


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in ``d`` dimensions, ``pi^(d/2) / Gamma(d/2 + 1)``."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return math.exp(0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0))


def _sq_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a - b
    return np.einsum("...j,...j->...", diff, diff)


@dataclass(frozen=True)
class RadiusQueryResult:
    radius: float
    neighbor_indices: tuple[int, ...]


class KnnIndex:
    """Immutable index over a fixed point set.

    Use :func:`build_index` rather than constructing directly.
    """

    def __init__(self, points, strategy: str = "auto", leaf_size: int = LEAF_SIZE):
        if isinstance(points, EmbeddingMatrix):
            values = points.values
        else:
            values = np.asarray(points, dtype=np.float64)
            if values.ndim == 1:
                values = values.reshape(-1, 1)
        if values.ndim != 2 or values.shape[0] == 0:
            raise EmptyPointSet("cannot index an empty point set")
        if not np.all(np.isfinite(values)):
            raise ValueError("point set contains non-finite values")
        if strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
        if strategy == "auto":
            strategy = "kdtree" if values.shape[1] <= AUTO_KDTREE_MAX_DIM else "brute"

        values = np.array(values, dtype=np.float64, order="C")
        values.setflags(write=False)
        self._points = values
        self.strategy = strategy
        self.leaf_size = leaf_size
        self._tree = None
        if strategy == "kdtree":
            # balanced_tree: median split along the dimension of widest spread
            self._tree = cKDTree(values, leafsize=leaf_size, balanced_tree=True)

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def n(self) -> int:
        return self._points.shape[0]

    @property
    def d(self) -> int:
        return self._points.shape[1]

    def __repr__(self):
        return f"KnnIndex(strategy={self.strategy!r}, n={self.n}, d={self.d})"

    def _check_k(self, k: int) -> int:
        if isinstance(k, bool) or int(k) != k or k < 1:
            raise ValueError(f"k must be a positive integer, got {k!r}")
        k = int(k)
        if k > self.n:
            raise KTooLarge(f"k={k} exceeds the number of indexed points n={self.n}")
        return k

    def _as_query(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 0:
            x = x.reshape(1)
        if x.shape != (self.d,):
            raise DimensionMismatch(f"query has shape {x.shape}, index dimension is {self.d}")
        return x

    def _as_queries(self, queries) -> np.ndarray:
        if isinstance(queries, EmbeddingMatrix):
            q = queries.values
        else:
            q = np.asarray(queries, dtype=np.float64)
            if q.ndim == 1:
                q = q.reshape(-1, 1) if self.d == 1 else q.reshape(1, -1)
        if q.ndim != 2 or q.shape[1] != self.d:
            raise DimensionMismatch(f"queries have shape {q.shape}, index dimension is {self.d}")
        return q

    def knn_radius(self, x, k: int) -> RadiusQueryResult:
        """Radius and the ``k`` neighbor indices; ties broken by ascending index."""
        k = self._check_k(k)
        x = self._as_query(x)
        if self._tree is None:
            cand = np.arange(self.n)
            d2 = _sq_dist(self._points, x)
        else:
            _, idx = self._tree.query(x, k=k)
            idx = np.atleast_1d(idx)
            r2 = _sq_dist(self._points[idx], x).max()
            # widen slightly so every point tied at the radius is a candidate
            reach = max(math.sqrt(r2) * (1.0 + 1e-9), 1e-300)
            cand = np.asarray(self._tree.query_ball_point(x, reach), dtype=np.intp)
            cand = np.union1d(cand, idx)
            d2 = _sq_dist(self._points[cand], x)
        order = np.lexsort((cand, d2))[:k]
        return RadiusQueryResult(
            radius=float(np.sqrt(d2[order[-1]])),
            neighbor_indices=tuple(int(i) for i in cand[order]),
        )

    def knn_radius_batch(self, queries, k: int, workers: int = 1) -> np.ndarray:
        """k-NN radius for every row of ``queries``, in order."""
        k = self._check_k(k)
        q = self._as_queries(queries)
        if q.shape[0] == 0:
            return np.empty(0)
        if self._tree is not None:
            _, idx = self._tree.query(q, k=[k], workers=workers)
            return np.sqrt(_sq_dist(q, self._points[idx[:, 0]]))

        rows = max(1, _CHUNK_ELEMENTS // (self.n * self.d))
        chunks = [q[i : i + rows] for i in range(0, q.shape[0], rows)]

        def kth(chunk):
            d2 = _sq_dist(chunk[:, None, :], self._points[None, :, :])
            return np.sqrt(np.partition(d2, k - 1, axis=1)[:, k - 1])

        if workers > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(kth, chunks))
        else:
            parts = [kth(c) for c in chunks]
        return np.concatenate(parts)

    def loo_radius(self, i: int, k: int) -> float:
        """k-NN radius of member ``i`` against the set with ``i`` removed.

        Equal to the (k+1)-NN radius against the full set, since the member
        itself sits at distance zero.
        """
        if k >= self.n:
            raise KTooLarge(f"leave-one-out needs k < n, got k={k}, n={self.n}")
        if not 0 <= i < self.n:
            raise IndexError(f"member index {i} out of range for n={self.n}")
        return self.knn_radius(self._points[i], k + 1).radius

    def loo_radii(self, k: int, workers: int = 1) -> np.ndarray:
        if k >= self.n:
            raise KTooLarge(f"leave-one-out needs k < n, got k={k}, n={self.n}")
        return self.knn_radius_batch(self._points, k + 1, workers=workers)

    def knn_density(self, x, k: int, v_d: float | None = None) -> float:
        """k-NN density estimate ``k / (n * v_d * r_k(x)^d)``."""
        r = self.knn_radius(x, k).radius
        if r == 0.0:
            raise ZeroRadius(f"query coincides with at least k={k} indexed points")
        if v_d is None:
            v_d = unit_ball_volume(self.d)
        return math.exp(math.log(k) - math.log(self.n) - math.log(v_d) - self.d * math.log(r))

    def knn_density_batch(self, queries, k: int, workers: int = 1) -> np.ndarray:
        r = self.knn_radius_batch(queries, k, workers=workers)
        if np.any(r == 0.0):
            raise ZeroRadius(f"a query coincides with at least k={k} indexed points")
        v_d = unit_ball_volume(self.d)
        return np.exp(math.log(k) - math.log(self.n) - math.log(v_d) - self.d * np.log(r))

    def count_in_ball(self, centers, radius, workers: int = 1) -> np.ndarray:
        """Number of indexed points with distance <= radius from each center."""
        c = self._as_queries(centers)
        radius = np.broadcast_to(np.asarray(radius, dtype=np.float64), (c.shape[0],))
        if self._tree is not None:
            return np.asarray(
                self._tree.query_ball_point(c, radius, return_length=True, workers=workers)
            )
        out = np.empty(c.shape[0], dtype=np.intp)
        for i in range(c.shape[0]):
            out[i] = np.count_nonzero(_sq_dist(self._points, c[i]) <= radius[i] ** 2)
        return out


def build_index(points, strategy: str = "auto", leaf_size: int = LEAF_SIZE) -> KnnIndex:
    """Index ``points`` for exact k-NN radius queries.

    ``auto`` picks the kd-tree for ``d <= 16`` and brute force above that.
    """
    return KnnIndex(points, strategy=strategy, leaf_size=leaf_size)
