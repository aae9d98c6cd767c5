"""Normalized k-NN radius OOD score, per layer and aggregated over layers.

For training embeddings ``X`` of one layer, a query ``x`` scores

    T_i(x) = r_k(x; X) / q_hat,    q_hat = mean over x' in X of r_{k+1}(x'; X)

where ``q_hat`` is the leave-one-out mean radius. The final score is the
unweighted mean of ``T_i`` over layers, and ``score > t`` flags OOD.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateNormalizer,
    DimensionMismatch,
    EmptyLayerList,
    KMismatch,
    KTooLarge,
)
from .knn import KnnIndex, build_index
from .tensor_io import EmbeddingMatrix, LayerStack, format_float

DEFAULT_K = 1


@dataclass(frozen=True)
class LayerNormalizer:
    q_hat: float
    k: int
    n: int


@dataclass(frozen=True)
class OodScorecard:
    per_layer_radii: np.ndarray  # (M, Nq)
    per_layer_T: np.ndarray  # (M, Nq)
    aggregate_T: np.ndarray  # (Nq,)
    k: int
    normalizers: tuple[LayerNormalizer, ...]
    layer_tags: tuple[str | None, ...]
    threshold: float | None = None
    verdicts: np.ndarray | None = None

    @property
    def n_layers(self) -> int:
        return self.per_layer_T.shape[0]

    @property
    def n_queries(self) -> int:
        return self.per_layer_T.shape[1]

    def to_csv(self) -> str:
        """Two CSV blocks separated by a blank line: per-layer rows, then aggregates."""
        buf = io.StringIO()
        buf.write(f"# k={self.k}\n")
        for i, norm in enumerate(self.normalizers):
            buf.write(f"# layer={i} q_hat={format_float(norm.q_hat)} n_train={norm.n}\n")
        if self.threshold is not None:
            buf.write(f"# threshold={format_float(self.threshold)}\n")
        buf.write("query_id,layer,radius,t_layer\n")
        for j in range(self.n_queries):
            for i in range(self.n_layers):
                buf.write(
                    f"{j},{i},{format_float(self.per_layer_radii[i, j])},"
                    f"{format_float(self.per_layer_T[i, j])}\n"
                )
        buf.write("\n")
        if self.verdicts is None:
            buf.write("query_id,t_aggregate\n")
            for j in range(self.n_queries):
                buf.write(f"{j},{format_float(self.aggregate_T[j])}\n")
        else:
            buf.write("query_id,t_aggregate,verdict\n")
            for j in range(self.n_queries):
                verdict = "ood" if self.verdicts[j] else "in"
                buf.write(f"{j},{format_float(self.aggregate_T[j])},{verdict}\n")
        return buf.getvalue()


def _index(layer) -> KnnIndex:
    return layer if isinstance(layer, KnnIndex) else build_index(layer)


def estimate_normalizer(train_layer, k: int = DEFAULT_K, workers: int = 1) -> LayerNormalizer:
    """Leave-one-out mean k-NN radius over the training points of one layer."""
    idx = _index(train_layer)
    if idx.n < k + 1:
        raise KTooLarge(f"normalizer needs n >= k + 1, got n={idx.n}, k={k}")
    radii = idx.loo_radii(k, workers=workers)
    # fsum: correctly rounded, so q_hat does not depend on row order
    q_hat = math.fsum(radii.tolist()) / idx.n
    if q_hat == 0.0:
        raise DegenerateNormalizer(
            f"every training point has {k} duplicates; leave-one-out mean radius is 0"
        )
    return LayerNormalizer(q_hat=q_hat, k=k, n=idx.n)


def layer_statistic(
    train_index: KnnIndex,
    norm: LayerNormalizer,
    queries,
    k: int = DEFAULT_K,
    workers: int = 1,
) -> np.ndarray:
    if k != norm.k:
        raise KMismatch(f"normalizer was estimated with k={norm.k}, scoring asked for k={k}")
    if isinstance(queries, EmbeddingMatrix) and queries.d != train_index.d:
        raise DimensionMismatch(
            f"query layer has d={queries.d}, training layer has d={train_index.d}"
        )
    return train_index.knn_radius_batch(queries, k, workers=workers) / norm.q_hat


def loo_statistic(train_index: KnnIndex, norm: LayerNormalizer, workers: int = 1) -> np.ndarray:
    """Per-layer statistic of each training point against the rest of the training set."""
    return train_index.loo_radii(norm.k, workers=workers) / norm.q_hat


def aggregate_statistic(per_layer) -> np.ndarray:
    per_layer = np.asarray(per_layer, dtype=np.float64)
    if per_layer.ndim == 1:
        per_layer = per_layer.reshape(-1, 1)
    if per_layer.shape[0] == 0:
        raise EmptyLayerList("cannot aggregate over zero layers")
    return per_layer.mean(axis=0)


def classify_threshold(scores, t: float) -> np.ndarray:
    """``True`` (OOD) where ``score > t``; a tie goes to in-distribution."""
    return np.asarray(scores, dtype=np.float64) > t


def score_stack(
    train: LayerStack,
    queries: LayerStack,
    k: int = DEFAULT_K,
    threshold: float | None = None,
    strategy: str = "auto",
    workers: int = 1,
) -> OodScorecard:
    if len(train) != len(queries):
        raise DimensionMismatch(
            f"train has {len(train)} layers, queries have {len(queries)}"
        )
    radii, stats, norms, tags = [], [], [], []
    for i, (tr, q) in enumerate(zip(train, queries)):
        if tr.d != q.d:
            raise DimensionMismatch(f"layer {i}: train d={tr.d}, query d={q.d}")
        idx = build_index(tr, strategy=strategy)
        try:
            norm = estimate_normalizer(idx, k, workers=workers)
        except DegenerateNormalizer as exc:
            name = tr.layer_tag if tr.layer_tag is not None else str(i)
            raise DegenerateNormalizer(f"layer {name}: {exc}") from None
        r = idx.knn_radius_batch(q, k, workers=workers)
        radii.append(r)
        stats.append(r / norm.q_hat)
        norms.append(norm)
        tags.append(tr.layer_tag)
    per_layer_T = np.vstack(stats)
    aggregate = aggregate_statistic(per_layer_T)
    verdicts = None if threshold is None else classify_threshold(aggregate, threshold)
    return OodScorecard(
        per_layer_radii=np.vstack(radii),
        per_layer_T=per_layer_T,
        aggregate_T=aggregate,
        k=k,
        normalizers=tuple(norms),
        layer_tags=tuple(tags),
        threshold=threshold,
        verdicts=verdicts,
    )
