"""Mann-Whitney AUC and DeLong variance for a single batch of scores.

Ties between a positive and a negative score count as half a concordant
pair everywhere (AUC and placement values alike). All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._backend import kernels

DEFAULT_MIN_POSITIVES = 10


class DegenerateBatchError(ValueError):
    """Raised when a batch lacks positives or negatives."""


@dataclass(frozen=True)
class ScoredBatch:
    """Scores of one window, split by true class."""

    positives: tuple[float, ...]
    negatives: tuple[float, ...]

    def __init__(self, positives: Sequence[float] = (), negatives: Sequence[float] = ()):
        object.__setattr__(self, "positives", tuple(float(s) for s in positives))
        object.__setattr__(self, "negatives", tuple(float(s) for s in negatives))

    @classmethod
    def from_labels(cls, scores: Sequence[float], labels: Sequence[int]) -> "ScoredBatch":
        if len(scores) != len(labels):
            raise ValueError("scores and labels differ in length")
        pos = [s for s, lab in zip(scores, labels) if lab == 1]
        neg = [s for s, lab in zip(scores, labels) if lab != 1]
        return cls(pos, neg)

    @property
    def m(self) -> int:
        return len(self.positives)

    @property
    def n(self) -> int:
        return len(self.negatives)

    def swapped(self) -> "ScoredBatch":
        return ScoredBatch(self.negatives, self.positives)


@dataclass(frozen=True)
class DelongEstimate:
    """AUC point estimate with its DeLong variance components."""

    theta: float
    s10: float
    s01: float
    variance: float
    used_upper_bound: bool
    m: int
    n: int

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance)


def _checked_arrays(batch: ScoredBatch) -> tuple[np.ndarray, np.ndarray]:
    if batch.m == 0 or batch.n == 0:
        raise DegenerateBatchError("degenerate batch: AUC undefined")
    x = np.asarray(batch.positives, dtype=np.float64)
    y = np.asarray(batch.negatives, dtype=np.float64)
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("invalid score")
    return x, y


def _sorted_placements(x: np.ndarray, y: np.ndarray):
    ox = np.argsort(x, kind="stable")
    oy = np.argsort(y, kind="stable")
    c10_sorted, c01_sorted = kernels.placement_counts(
        np.ascontiguousarray(x[ox]), np.ascontiguousarray(y[oy])
    )
    c10 = np.empty_like(c10_sorted)
    c01 = np.empty_like(c01_sorted)
    c10[ox] = c10_sorted
    c01[oy] = c01_sorted
    return c10, c01


def placement_values(batch: ScoredBatch) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample placement values ``(V10, V01)`` in input order.

    ``V10[i]`` is the fraction of negatives scored below positive ``i``;
    ``V01[j]`` is the fraction of positives scored above negative ``j``.
    """
    x, y = _checked_arrays(batch)
    c10, c01 = _sorted_placements(x, y)
    return c10 / (2.0 * y.size), c01 / (2.0 * x.size)


def auc(batch: ScoredBatch) -> float:
    """Mann-Whitney estimate of the area under the ROC curve."""
    x, y = _checked_arrays(batch)
    c10, _ = _sorted_placements(x, y)
    # integer numerator keeps the result exact up to one final division
    return int(c10.sum()) / (2.0 * x.size * y.size)


def variance_upper_bound(m: int, n: int) -> float:
    """Largest possible DeLong variance for ``m`` positives and ``n`` negatives."""
    if m < 1 or n < 1:
        raise ValueError("unbounded variance")
    return 1.0 / m + 1.0 / n


def delong(batch: ScoredBatch, min_positives: int = DEFAULT_MIN_POSITIVES) -> DelongEstimate:
    """AUC with DeLong variance, or the conservative bound for sparse positives.

    The sample variance is used only when there are more than
    ``min_positives`` positives and at least two samples of each class;
    otherwise the variance is ``1/m + 1/n`` and both components are 1.
    """
    x, y = _checked_arrays(batch)
    m, n = x.size, y.size
    c10, c01 = _sorted_placements(x, y)
    theta = int(c10.sum()) / (2.0 * m * n)
    if m > min_positives and m >= 2 and n >= 2:
        v10 = c10 / (2.0 * n)
        v01 = c01 / (2.0 * m)
        s10 = float(np.sum((v10 - theta) ** 2) / (m - 1))
        s01 = float(np.sum((v01 - theta) ** 2) / (n - 1))
        return DelongEstimate(theta, s10, s01, s10 / m + s01 / n, False, m, n)
    return DelongEstimate(theta, 1.0, 1.0, variance_upper_bound(m, n), True, m, n)


def _resample_counts(rng: np.random.Generator, size: int, resamples: int) -> np.ndarray:
    """Multiplicity of each item in ``resamples`` draws of ``size`` with replacement."""
    idx = rng.integers(0, size, (resamples, size))
    idx += np.arange(resamples)[:, None] * size
    return np.bincount(idx.ravel(), minlength=resamples * size).reshape(resamples, size)


def bootstrap_variance(batch: ScoredBatch, resamples: int = 2000, seed: int = 0) -> float:
    """Stratified bootstrap variance of the AUC.

    Positives and negatives are resampled independently with replacement.
    Deterministic for a given ``seed``.
    """
    x, y = _checked_arrays(batch)
    if x.size < 2 or y.size < 2:
        raise DegenerateBatchError("bootstrap needs at least two samples per class")
    if resamples < 100:
        raise ValueError("resamples must be at least 100")
    rng = np.random.default_rng(seed)
    pos_counts = _resample_counts(rng, x.size, resamples)
    neg_counts = _resample_counts(rng, y.size, resamples)
    aucs = kernels.weighted_auc(
        np.ascontiguousarray(np.sort(x)),
        np.ascontiguousarray(np.sort(y)),
        np.ascontiguousarray(pos_counts),
        np.ascontiguousarray(neg_counts),
    )
    return float(np.var(aucs, ddof=1))
