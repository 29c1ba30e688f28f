# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled split scan; semantics mirror ``_split_py.scan_splits``."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.math cimport INFINITY, fabs

from ._split_py import TIE_RTOL as _TIE_RTOL

cdef double TIE_RTOL = _TIE_RTOL

cnp.import_array()


def scan_splits(const double[:, ::1] X, const cnp.int64_t[::1] rows,
                const cnp.int64_t[:, ::1] order, const cnp.int64_t[::1] features,
                const double[:, ::1] stats, const double[::1] denom,
                double lam, Py_ssize_t min_leaf):
    cdef Py_ssize_t m = rows.shape[0]
    cdef Py_ssize_t nf = features.shape[0]
    cdef Py_ssize_t nc = stats.shape[1]
    cdef Py_ssize_t best_j = -1, best_k = -1
    cdef double best = -INFINITY
    cdef Py_ssize_t j, k, c, r, f, cnt
    cdef double d_tot, dl, dr, acc_d, score, sl, sr, x_here, x_next, cut
    if m < 2 or m < 2 * min_leaf:
        return best_j, best_k, best
    cdef double *s_tot = <double *> malloc(nc * sizeof(double))
    cdef double *s_acc = <double *> malloc(nc * sizeof(double))
    # every candidate score, -inf where inadmissible; scanned again for ties
    cdef double *all_scores = <double *> malloc(nf * (m - 1) * sizeof(double))
    if s_tot == NULL or s_acc == NULL or all_scores == NULL:
        free(s_tot); free(s_acc); free(all_scores)
        raise MemoryError()
    try:
        for j in range(nf):
            f = features[j]
            for c in range(nc):
                s_tot[c] = 0.0
                s_acc[c] = 0.0
            d_tot = 0.0
            for k in range(m):
                r = rows[order[j, k]]
                for c in range(nc):
                    s_tot[c] += stats[r, c]
                d_tot += denom[r]
            acc_d = 0.0
            for k in range(m - 1):
                all_scores[j * (m - 1) + k] = -INFINITY
                r = rows[order[j, k]]
                for c in range(nc):
                    s_acc[c] += stats[r, c]
                acc_d += denom[r]
                cnt = k + 1
                if cnt < min_leaf or m - cnt < min_leaf:
                    continue
                x_here = X[r, f]
                x_next = X[rows[order[j, k + 1]], f]
                if not (x_here < x_next):
                    continue
                dl = acc_d + lam
                dr = (d_tot - acc_d) + lam
                if not (dl > 0 and dr > 0):
                    continue
                score = 0.0
                for c in range(nc):
                    sl = s_acc[c]
                    sr = s_tot[c] - sl
                    score = score + (sl * sl / dl + sr * sr / dr)
                all_scores[j * (m - 1) + k] = score
                if score > best:
                    best = score
        if best == -INFINITY:
            return best_j, best_k, best
        cut = best - TIE_RTOL * fabs(best)
        for j in range(nf):
            for k in range(m - 1):
                if all_scores[j * (m - 1) + k] >= cut:
                    return j, k, all_scores[j * (m - 1) + k]
    finally:
        free(s_tot)
        free(s_acc)
        free(all_scores)
    return best_j, best_k, best
