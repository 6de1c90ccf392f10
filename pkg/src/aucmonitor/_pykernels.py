"""Numpy implementation of the pairwise-ranking kernels.

Used when the compiled extension is unavailable or when
``AUCMONITOR_PURE_PYTHON`` is set. Inputs must be sorted ascending.
"""

import numpy as np


def placement_counts(xs, ys):
    """Doubled placement counts for sorted positives ``xs`` and negatives ``ys``.

    Returns ``(c10, c01)`` with ``c10[i] = 2*#(y < xs[i]) + #(y == xs[i])``
    and ``c01[j] = 2*#(x > ys[j]) + #(x == ys[j])``.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    m = xs.shape[0]
    c10 = np.searchsorted(ys, xs, "left") + np.searchsorted(ys, xs, "right")
    c01 = 2 * m - np.searchsorted(xs, ys, "left") - np.searchsorted(xs, ys, "right")
    return c10.astype(np.int64), c01.astype(np.int64)


def weighted_auc(xs, ys, pos_counts, neg_counts):
    """AUC of each multiplicity-weighted resample of the sorted batch."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    pos_counts = np.asarray(pos_counts, dtype=np.int64)
    neg_counts = np.asarray(neg_counts, dtype=np.int64)
    lo = np.searchsorted(ys, xs, "left")
    hi = np.searchsorted(ys, xs, "right")
    cum = np.zeros((neg_counts.shape[0], ys.shape[0] + 1), dtype=np.int64)
    np.cumsum(neg_counts, axis=1, out=cum[:, 1:])
    acc = (pos_counts * (cum[:, lo] + cum[:, hi])).sum(axis=1)
    tot_pos = pos_counts.sum(axis=1)
    return acc / (2.0 * tot_pos * cum[:, -1])
