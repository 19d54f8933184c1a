# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled best-split search; mirrors _split_py.best_split exactly.

The per-feature sort is delegated to numpy's stable argsort so both kernels
scan candidates in the identical order; the prefix-sum scan runs in C.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def best_split(cnp.float64_t[:, ::1] X, cnp.float64_t[::1] y,
               cnp.int64_t[::1] sample_idx, cnp.int64_t[::1] features,
               long min_leaf):
    cdef Py_ssize_t m = sample_idx.shape[0]
    cdef Py_ssize_t k = features.shape[0]
    cdef Py_ssize_t i, jj, pos
    cdef long j
    cdef double total, s, gain, nl, nr, base
    cdef double best_gain = 0.0
    cdef double best_thr = 0.0
    cdef long best_f = -1
    cdef double feat_gain
    cdef Py_ssize_t feat_pos

    if m < 2 * min_leaf:
        return -1, 0.0, 0.0

    v_arr = np.empty(m, dtype=np.float64)
    cdef cnp.float64_t[::1] vbuf = v_arr
    cdef cnp.float64_t[::1] vs = np.empty(m, dtype=np.float64)
    cdef cnp.float64_t[::1] ts = np.empty(m, dtype=np.float64)
    cdef cnp.intp_t[::1] order

    cdef bint have_base = 0
    base = 0.0

    for jj in range(k):
        j = features[jj]
        for i in range(m):
            vbuf[i] = X[sample_idx[i], j]
        order = np.argsort(v_arr, kind="stable")
        for i in range(m):
            vs[i] = vbuf[order[i]]
            ts[i] = y[sample_idx[order[i]]]
        total = 0.0
        for i in range(m):
            total += ts[i]
        if not have_base:
            base = total * total / m
            have_base = 1
        s = 0.0
        feat_gain = -np.inf
        feat_pos = -1
        for i in range(m - 1):
            s += ts[i]
            if vs[i] < vs[i + 1] and i + 1 >= min_leaf and m - i - 1 >= min_leaf:
                nl = i + 1
                nr = m - i - 1
                gain = (s * s / nl) + ((total - s) * (total - s) / nr) - base
                if gain > feat_gain:
                    feat_gain = gain
                    feat_pos = i
        if feat_pos >= 0 and feat_gain > best_gain:
            best_gain = feat_gain
            best_f = j
            pos = feat_pos
            best_thr = (vs[pos] + vs[pos + 1]) / 2.0
    return int(best_f), float(best_thr), float(best_gain)
