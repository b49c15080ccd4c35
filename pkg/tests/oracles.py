"""Independent reference computations used as test oracles.

Nothing here imports the code under test.
"""
import itertools
import math
from fractions import Fraction

import numpy as np


def auc_pairs(truth, scores):
    """O(n^2) pair counting: wins + ties/2 over all (positive, negative) pairs."""
    truth = np.asarray(truth, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    pos = scores[truth][:, None]
    neg = scores[~truth][None, :]
    wins = (pos > neg).sum() + 0.5 * (pos == neg).sum()
    return wins / (pos.size * neg.size)


def gini(counts):
    total = sum(counts)
    return 1.0 - sum((c / total) ** 2 for c in counts)


def _exact_gini(labels):
    n = len(labels)
    return 1 - sum(Fraction(labels.count(c), n) ** 2 for c in set(labels))


def exhaustive_split(xs, labels):
    """Best (threshold, decrease) by trying every midpoint, single feature.

    Decreases are compared in exact rational arithmetic so genuine ties
    resolve to the lowest threshold rather than to rounding noise.
    """
    values = sorted(set(xs))
    parent = _exact_gini(list(labels))
    best = None
    for a, b in zip(values, values[1:]):
        thr = (a + b) / 2
        left = [l for x, l in zip(xs, labels) if x < thr]
        right = [l for x, l in zip(xs, labels) if x >= thr]
        dec = parent - (len(left) * _exact_gini(left) + len(right) * _exact_gini(right)) / len(xs)
        if best is None or dec > best[1]:
            best = (thr, dec)
    return None if best is None else (best[0], float(best[1]))


def log_loss_from_scores(y, z):
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    # log(1 + e^z) - y z, written without the library helper
    softplus = np.where(z > 0, z + np.log1p(np.exp(-np.abs(z))), np.log1p(np.exp(z)))
    return float(np.mean(softplus - y * z))


def logistic_objective(w, b, X, y, l2):
    z = X @ w + b
    return log_loss_from_scores(y, z) + 0.5 * l2 * float(w @ w)


def central_difference(fun, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def all_bit_vectors(d):
    return np.array(list(itertools.product([0.0, 1.0], repeat=d)))


def two_topic_corpus(seed, n_docs=100, doc_len=50, doc_alpha=0.5):
    """Documents drawn from two topics with disjoint 10-word supports.
    Returns (token lists, supports)."""
    rng = np.random.default_rng(seed)
    supports = ([f"alpha{i}" for i in range(10)], [f"omega{i}" for i in range(10)])
    phi = [rng.dirichlet(np.ones(10)) for _ in supports]
    docs = []
    for _ in range(n_docs):
        theta = rng.dirichlet([doc_alpha, doc_alpha])
        z = rng.choice(2, size=doc_len, p=theta)
        docs.append([supports[k][rng.choice(10, p=phi[k])] for k in z])
    return docs, supports


def perplexity_direct(theta, phi, docs):
    total, n = 0.0, 0
    for d, doc in enumerate(docs):
        for w in doc:
            total += math.log(sum(theta[d][k] * phi[k][w] for k in range(len(phi))))
            n += 1
    return math.exp(-total / n)
