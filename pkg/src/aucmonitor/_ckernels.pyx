# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise-ranking kernels.

Same contract as :mod:`aucmonitor._pykernels`; inputs must already be
sorted ascending and free of NaN.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def placement_counts(const double[::1] xs, const double[::1] ys):
    """Doubled placement counts for sorted positives ``xs`` and negatives ``ys``.

    Returns ``(c10, c01)`` with ``c10[i] = 2*#(y < xs[i]) + #(y == xs[i])``
    and ``c01[j] = 2*#(x > ys[j]) + #(x == ys[j])``.
    """
    cdef Py_ssize_t m = xs.shape[0], n = ys.shape[0]
    cdef Py_ssize_t i, j, lo = 0, hi = 0
    c10_arr = np.empty(m, dtype=np.int64)
    c01_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] c10 = c10_arr
    cdef cnp.int64_t[::1] c01 = c01_arr

    for i in range(m):
        while lo < n and ys[lo] < xs[i]:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < n and ys[hi] <= xs[i]:
            hi += 1
        c10[i] = lo + hi

    lo = 0
    hi = 0
    for j in range(n):
        while lo < m and xs[lo] < ys[j]:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < m and xs[hi] <= ys[j]:
            hi += 1
        # 2*(m - hi) + (hi - lo)
        c01[j] = 2 * m - hi - lo
    return c10_arr, c01_arr


def weighted_auc(const double[::1] xs, const double[::1] ys,
                 const cnp.int64_t[:, ::1] pos_counts,
                 const cnp.int64_t[:, ::1] neg_counts):
    """AUC of each multiplicity-weighted resample of the sorted batch.

    Row ``b`` of ``pos_counts`` (shape ``(B, m)``) and ``neg_counts``
    (shape ``(B, n)``) gives how often each sorted score was drawn.
    """
    cdef Py_ssize_t m = xs.shape[0], n = ys.shape[0]
    cdef Py_ssize_t n_rows = pos_counts.shape[0]
    cdef Py_ssize_t b, i, j, lo = 0, hi = 0
    cdef cnp.int64_t tot_pos, tot_neg, acc, below, upto
    lo_arr = np.empty(m, dtype=np.intp)
    hi_arr = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t[::1] lo_idx = lo_arr
    cdef Py_ssize_t[::1] hi_idx = hi_arr
    cum_arr = np.empty(n + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] cum = cum_arr
    out_arr = np.empty(n_rows, dtype=np.float64)
    cdef double[::1] out = out_arr

    for i in range(m):
        while lo < n and ys[lo] < xs[i]:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < n and ys[hi] <= xs[i]:
            hi += 1
        lo_idx[i] = lo
        hi_idx[i] = hi

    with nogil:
        for b in range(n_rows):
            cum[0] = 0
            for j in range(n):
                cum[j + 1] = cum[j] + neg_counts[b, j]
            tot_neg = cum[n]
            tot_pos = 0
            acc = 0
            for i in range(m):
                below = cum[lo_idx[i]]
                upto = cum[hi_idx[i]]
                acc += pos_counts[b, i] * (below + upto)
                tot_pos += pos_counts[b, i]
            out[b] = <double>acc / (2.0 * <double>tot_pos * <double>tot_neg)
    return out_arr
