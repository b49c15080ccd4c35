"""Pure-Python/numpy versions of the compiled kernels.

Arithmetic is ordered exactly like ``_kernels.pyx`` so both backends agree
bit for bit.
"""
import math

import numpy as np


TIE_TOL = 1e-12


def tie_floor(best):
    """Decreases at or above this value count as tied with ``best``."""
    scale = abs(best)
    if scale < 1.0:
        scale = 1.0
    return best - TIE_TOL * scale


def _select(xs, dec):
    """First candidate within the tie tolerance of the best decrease."""
    best = float(dec.max())
    if best == -math.inf:
        return False, 0.0, 0.0
    i = int(np.argmax(dec >= tie_floor(best)))
    return True, _pick_threshold(xs, i), float(dec[i])


def _pick_threshold(xs, i):
    thr = (xs[i] + xs[i + 1]) * 0.5
    if thr <= xs[i]:
        thr = xs[i + 1]
    return float(thr)


def _valid_positions(xs, min_leaf):
    n = xs.shape[0]
    nl = np.arange(1, n, dtype=np.int64)
    ok = (xs[:-1] < xs[1:]) & (nl >= min_leaf) & (n - nl >= min_leaf)
    return nl, ok


def scan_gini(xs, ys, n_classes, min_leaf):
    n = xs.shape[0]
    if n < 2:
        return False, 0.0, 0.0
    onehot = np.zeros((n, n_classes), dtype=np.int64)
    onehot[np.arange(n), ys] = 1
    left = np.cumsum(onehot, axis=0)[:-1]
    total = left[-1] + onehot[-1]
    nf = float(n)
    g_parent = 1.0 - float((total * total).sum()) / (nf * nf)
    nl, ok = _valid_positions(xs, min_leaf)
    if not ok.any():
        return False, 0.0, 0.0
    right = total - left
    sq_l = (left * left).sum(axis=1).astype(np.float64)
    sq_r = (right * right).sum(axis=1).astype(np.float64)
    nlf = nl.astype(np.float64)
    nrf = (n - nl).astype(np.float64)
    g_l = 1.0 - sq_l / (nlf * nlf)
    g_r = 1.0 - sq_r / (nrf * nrf)
    dec = g_parent - (nlf * g_l + nrf * g_r) / nf
    return _select(xs, np.where(ok, dec, -np.inf))


def scan_sse(xs, rs, min_leaf):
    n = xs.shape[0]
    if n < 2:
        return False, 0.0, 0.0
    csum = np.cumsum(rs)
    tot = csum[-1]
    nf = float(n)
    base = tot * tot / nf
    nl, ok = _valid_positions(xs, min_leaf)
    if not ok.any():
        return False, 0.0, 0.0
    sl = csum[:-1]
    sr = tot - sl
    dec = (sl * sl / nl.astype(np.float64) + sr * sr / (n - nl).astype(np.float64) - base) / nf
    return _select(xs, np.where(ok, dec, -np.inf))


def gibbs_sweep(words, docs, z, n_dk, n_kw, n_k, alpha, beta, u):
    K = n_k.shape[0]
    vbeta = float(n_kw.shape[1]) * beta
    for i in range(words.shape[0]):
        w = words[i]
        d = docs[i]
        k = z[i]
        n_dk[d, k] -= 1
        n_kw[k, w] -= 1
        n_k[k] -= 1
        p = (n_dk[d].astype(np.float64) + alpha) * (n_kw[:, w].astype(np.float64) + beta) / (n_k.astype(np.float64) + vbeta)
        cum = np.cumsum(p)
        new_k = int(np.searchsorted(cum, u[i] * cum[-1], side="right"))
        if new_k >= K:
            new_k = K - 1
        z[i] = new_k
        n_dk[d, new_k] += 1
        n_kw[new_k, w] += 1
        n_k[new_k] += 1


def pegasos_epoch(X, y, w, order, t0, lam, project):
    d = X.shape[1]
    t = int(t0)
    radius = 1.0 / math.sqrt(lam)
    wl = [float(v) for v in w]
    for r in order:
        row = X[r].tolist()
        yr = float(y[r])
        t += 1
        eta = 1.0 / (lam * float(t))
        margin = 0.0
        for f in range(d):
            margin = margin + wl[f] * row[f]
        margin = yr * margin
        shrink = 1.0 - eta * lam
        wl = [shrink * v for v in wl]
        if margin < 1.0:
            step = eta * yr
            wl = [wl[f] + step * row[f] for f in range(d)]
        if project:
            norm = 0.0
            for v in wl:
                norm = norm + v * v
            norm = math.sqrt(norm)
            if norm > radius:
                scale = radius / norm
                wl = [v * scale for v in wl]
    w[:] = wl
    return t
