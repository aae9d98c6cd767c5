"""Evaluation: ROC-AUC with OOD as the positive class, threshold rates, histograms."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import EmptyClass, EmptyInput, NonPositiveBinCount
from .tensor_io import format_float


@dataclass(frozen=True)
class LabeledScores:
    in_scores: np.ndarray
    out_scores: np.ndarray

    def __post_init__(self):
        for name in ("in_scores", "out_scores"):
            arr = np.asarray(getattr(self, name), dtype=np.float64).ravel()
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, arr)

    def _require_both(self):
        if self.in_scores.size == 0 or self.out_scores.size == 0:
            raise EmptyClass(
                f"need both classes, got {self.in_scores.size} in / {self.out_scores.size} out"
            )


def roc_auc(ls: LabeledScores) -> float:
    """P(out > in) + P(out == in) / 2 over all cross pairs, via midranks.

    Per-class weighting that balances unequal class sizes leaves this value
    unchanged, so no explicit weights are applied.
    """
    ls._require_both()
    a, b = ls.in_scores.size, ls.out_scores.size
    ranks = rankdata(np.concatenate([ls.in_scores, ls.out_scores]), method="average")
    # midranks are half-integers, so the rank sum is exact below 2**52
    u_out = ranks[a:].sum() - b * (b + 1) / 2.0
    return float(u_out / (a * b))


def roc_auc_pairs(ls: LabeledScores) -> float:
    """O(a*b) pair-counting reference for :func:`roc_auc`."""
    ls._require_both()
    diff = ls.out_scores[:, None] - ls.in_scores[None, :]
    wins = np.count_nonzero(diff > 0)
    ties = np.count_nonzero(diff == 0)
    return float((wins + 0.5 * ties) / (ls.in_scores.size * ls.out_scores.size))


def pr_at_threshold(ls: LabeledScores, t: float, inclusive: bool = False) -> tuple[float, float]:
    """(recall, precision-error) of the rule ``score > t`` (``>=`` if inclusive).

    Recall is the flagged fraction of OOD scores; precision-error is the
    flagged fraction of in-distribution scores.
    """
    ls._require_both()
    if inclusive:
        recall = np.mean(ls.out_scores >= t)
        err = np.mean(ls.in_scores >= t)
    else:
        recall = np.mean(ls.out_scores > t)
        err = np.mean(ls.in_scores > t)
    return float(recall), float(err)


@dataclass(frozen=True)
class HistogramSpec:
    edges: np.ndarray
    count_in: np.ndarray
    count_out: np.ndarray

    @property
    def bin_count(self) -> int:
        return self.count_in.size

    @property
    def range(self) -> tuple[float, float]:
        return float(self.edges[0]), float(self.edges[-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("bin_lo,bin_hi,count_in,count_out\n")
        for lo, hi, ci, co in zip(self.edges[:-1], self.edges[1:], self.count_in, self.count_out):
            buf.write(f"{format_float(lo)},{format_float(hi)},{ci},{co}\n")
        return buf.getvalue()


def radius_histogram(radii_in, radii_out, bin_count: int = 50, range=None) -> HistogramSpec:
    """Per-class counts on shared bins; last bin is closed, the rest half-open."""
    radii_in = np.asarray(radii_in, dtype=np.float64).ravel()
    radii_out = np.asarray(radii_out, dtype=np.float64).ravel()
    if radii_in.size == 0 or radii_out.size == 0:
        raise EmptyInput("histogram needs nonempty inputs for both classes")
    if bin_count < 1:
        raise NonPositiveBinCount(f"bin_count must be positive, got {bin_count}")
    if range is None:
        both = np.concatenate([radii_in, radii_out])
        range = (float(both.min()), float(both.max()))
    edges = np.histogram_bin_edges(np.empty(0), bins=bin_count, range=range)
    count_in, _ = np.histogram(radii_in, bins=edges)
    count_out, _ = np.histogram(radii_out, bins=edges)
    return HistogramSpec(edges=edges, count_in=count_in, count_out=count_out)


def metrics_csv(rows) -> str:
    buf = io.StringIO()
    buf.write("metric,value\n")
    for name, value in rows:
        buf.write(f"{name},{float(value)!r}\n")
    return buf.getvalue()
