"""
k-NN radii and leave-one-out radii
==================================

The k-NN radius of a query is the distance to its k-th closest training
point.  Both search strategies return the same numbers.
"""

import numpy as np

from knnood import build_index

# three points on a line
idx = build_index([[0.0], [1.0], [3.0]])
print(idx.knn_radius([2.0], 1))  # two neighbors at distance 1, lower index wins
print(idx.knn_radius([2.0], 3).radius)

# a training point is its own nearest neighbor, so leave it out
print([idx.loo_radius(i, 1) for i in range(3)])

# brute force and kd-tree on a larger cloud
rng = np.random.default_rng(0)
pts = rng.standard_normal((5000, 3))
queries = rng.standard_normal((10, 3)) * 2
brute = build_index(pts, "brute").knn_radius_batch(queries, 10)
tree = build_index(pts, "kdtree").knn_radius_batch(queries, 10)
print(np.array_equal(brute, tree), brute.round(3))

# density estimate k / (n v_d r^d) near the mode and in the tail
print(build_index(pts).knn_density_batch([[0.0, 0, 0], [2.5, 0, 0]], 50))
