# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Every function mirrors ``_fallback`` operation for
operation so both backends return bit-identical results."""

from libc.math cimport fabs, sqrt, INFINITY
from libc.stdint cimport int64_t
from libc.stdlib cimport malloc, calloc, free

import numpy as np


cdef double _TIE_TOL = 1e-12
TIE_TOL = _TIE_TOL


cdef double _tie_floor(double best):
    cdef double scale = fabs(best)
    if scale < 1.0:
        scale = 1.0
    return best - _TIE_TOL * scale


cdef tuple _select(const double[::1] xs, double *decs, Py_ssize_t m):
    """First candidate whose decrease is within the tie tolerance of the
    best one; its threshold is the midpoint, nudged up if it rounds down."""
    cdef Py_ssize_t i
    cdef double best = -INFINITY, floor_, thr
    for i in range(m):
        if decs[i] > best:
            best = decs[i]
    if best == -INFINITY:
        return False, 0.0, 0.0
    floor_ = _tie_floor(best)
    for i in range(m):
        if decs[i] >= floor_:
            thr = (xs[i] + xs[i + 1]) * 0.5
            if thr <= xs[i]:
                thr = xs[i + 1]
            return True, thr, decs[i]
    return False, 0.0, 0.0


def scan_gini(const double[::1] xs, const int64_t[::1] ys, Py_ssize_t n_classes, Py_ssize_t min_leaf):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t i, c, nl, nr
    cdef int64_t sq_total = 0, sq_l = 0, sq_r, cl, cr
    cdef int64_t *left
    cdef int64_t *total
    cdef double *decs
    cdef double nf = <double>n, g_parent, g_l, g_r
    if n < 2:
        return False, 0.0, 0.0
    left = <int64_t *> calloc(n_classes, sizeof(int64_t))
    total = <int64_t *> calloc(n_classes, sizeof(int64_t))
    decs = <double *> malloc((n - 1) * sizeof(double))
    try:
        for i in range(n):
            total[ys[i]] += 1
        for c in range(n_classes):
            sq_total += total[c] * total[c]
        g_parent = 1.0 - <double>sq_total / (nf * nf)
        sq_r = sq_total
        for i in range(n - 1):
            c = ys[i]
            cl = left[c]
            cr = total[c] - cl
            # moving one row of class c from right to left
            sq_l += 2 * cl + 1
            sq_r -= 2 * cr - 1
            left[c] = cl + 1
            decs[i] = -INFINITY
            if not (xs[i] < xs[i + 1]):
                continue
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            g_l = 1.0 - <double>sq_l / (<double>nl * <double>nl)
            g_r = 1.0 - <double>sq_r / (<double>nr * <double>nr)
            decs[i] = g_parent - (<double>nl * g_l + <double>nr * g_r) / nf
        return _select(xs, decs, n - 1)
    finally:
        free(left)
        free(total)
        free(decs)


def scan_sse(const double[::1] xs, const double[::1] rs, Py_ssize_t min_leaf):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t i, nl, nr
    cdef double tot = 0.0, sl = 0.0, sr
    cdef double nf = <double>n, base
    cdef double *decs
    if n < 2:
        return False, 0.0, 0.0
    for i in range(n):
        tot += rs[i]
    base = tot * tot / nf
    decs = <double *> malloc((n - 1) * sizeof(double))
    try:
        for i in range(n - 1):
            sl += rs[i]
            decs[i] = -INFINITY
            if not (xs[i] < xs[i + 1]):
                continue
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            sr = tot - sl
            decs[i] = (sl * sl / <double>nl + sr * sr / <double>nr - base) / nf
        return _select(xs, decs, n - 1)
    finally:
        free(decs)


def gibbs_sweep(const int64_t[::1] words, const int64_t[::1] docs, int64_t[::1] z,
                int64_t[:, ::1] n_dk, int64_t[:, ::1] n_kw, int64_t[::1] n_k,
                double alpha, double beta, const double[::1] u):
    """One collapsed-Gibbs pass over every token, in token order."""
    cdef Py_ssize_t N = words.shape[0]
    cdef Py_ssize_t K = n_k.shape[0]
    cdef Py_ssize_t V = n_kw.shape[1]
    cdef Py_ssize_t i, k, w, d, new_k
    cdef double vbeta = <double>V * beta
    cdef double acc, target
    cdef double *cum = <double *> malloc(K * sizeof(double))
    try:
        for i in range(N):
            w = words[i]
            d = docs[i]
            k = z[i]
            n_dk[d, k] -= 1
            n_kw[k, w] -= 1
            n_k[k] -= 1
            acc = 0.0
            for k in range(K):
                acc = acc + (<double>n_dk[d, k] + alpha) * (<double>n_kw[k, w] + beta) / (<double>n_k[k] + vbeta)
                cum[k] = acc
            target = u[i] * acc
            new_k = K - 1
            for k in range(K):
                if cum[k] > target:
                    new_k = k
                    break
            z[i] = new_k
            n_dk[d, new_k] += 1
            n_kw[new_k, w] += 1
            n_k[new_k] += 1
    finally:
        free(cum)


def pegasos_epoch(const double[:, ::1] X, const double[::1] y, double[::1] w,
                  const int64_t[::1] order, int64_t t0, double lam, bint project):
    """Pegasos updates over ``order``; returns the new step counter."""
    cdef Py_ssize_t m = order.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t j, r, f
    cdef int64_t t = t0
    cdef double eta, margin, shrink, step, norm, radius, scale
    radius = 1.0 / sqrt(lam)
    for j in range(m):
        r = order[j]
        t += 1
        eta = 1.0 / (lam * <double>t)
        margin = 0.0
        for f in range(d):
            margin = margin + w[f] * X[r, f]
        margin = y[r] * margin
        shrink = 1.0 - eta * lam
        for f in range(d):
            w[f] = shrink * w[f]
        if margin < 1.0:
            step = eta * y[r]
            for f in range(d):
                w[f] = w[f] + step * X[r, f]
        if project:
            norm = 0.0
            for f in range(d):
                norm = norm + w[f] * w[f]
            norm = sqrt(norm)
            if norm > radius:
                scale = radius / norm
                for f in range(d):
                    w[f] = w[f] * scale
    return t
