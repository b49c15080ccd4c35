"""The compiled kernels and the numpy fallback must agree bit for bit."""
import numpy as np
import pytest

from complaint_insight import _core
from complaint_insight import learn as L

pytestmark = pytest.mark.skipif("compiled" not in _core.BACKENDS, reason="compiled kernels not built")
PY = _core.BACKENDS["python"]
C = _core.BACKENDS.get("compiled")


@pytest.mark.parametrize("seed", range(50))
def test_scan_gini_identical(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 80))
    k = int(rng.integers(1, 5))
    xs = np.sort(rng.integers(0, 10, size=n).astype(np.float64))
    ys = rng.integers(0, k, size=n).astype(np.int64)
    min_leaf = int(rng.integers(1, 4))
    assert PY.scan_gini(xs, ys, k, min_leaf) == C.scan_gini(xs, ys, k, min_leaf)


@pytest.mark.parametrize("seed", range(50))
def test_scan_sse_identical(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 80))
    xs = np.sort(rng.normal(size=n).round(1))
    rs = rng.normal(size=n)
    assert PY.scan_sse(xs, rs, 2) == C.scan_sse(xs, rs, 2)


@pytest.mark.parametrize("seed", range(10))
def test_pegasos_identical(seed):
    rng = np.random.default_rng(seed)
    X = np.ascontiguousarray(rng.normal(size=(40, 4)))
    y = np.where(rng.random(40) > 0.5, 1.0, -1.0)
    order = rng.permutation(40).astype(np.int64)
    w1, w2 = np.zeros(4), np.zeros(4)
    t1 = PY.pegasos_epoch(X, y, w1, order, 0, 0.01, True)
    t2 = C.pegasos_epoch(X, y, w2, order, 0, 0.01, True)
    assert t1 == t2 and w1.tobytes() == w2.tobytes()


@pytest.mark.parametrize("seed", range(10))
def test_gibbs_sweep_identical(seed):
    rng = np.random.default_rng(seed)
    K, V, D, N = 4, 30, 8, 300
    words = rng.integers(0, V, size=N).astype(np.int64)
    docs = np.sort(rng.integers(0, D, size=N)).astype(np.int64)
    z = rng.integers(0, K, size=N).astype(np.int64)
    n_dk = np.zeros((D, K), np.int64)
    n_kw = np.zeros((K, V), np.int64)
    np.add.at(n_dk, (docs, z), 1)
    np.add.at(n_kw, (z, words), 1)
    n_k = n_kw.sum(axis=1)
    u = rng.random(N)
    states = [[a.copy() for a in (z, n_dk, n_kw, n_k)] for _ in range(2)]
    PY.gibbs_sweep(words, docs, *states[0], 0.3, 0.01, u)
    C.gibbs_sweep(words, docs, *states[1], 0.3, 0.01, u)
    for a, b in zip(*states):
        assert np.array_equal(a, b)


def _train_all(X, yb, ym):
    return [
        L.train_decision_tree(X, L.TreeConfig(max_depth=6, min_leaf=2), labels=ym),
        L.train_random_forest(X, L.ForestConfig(n_trees=5, max_depth=5), labels=ym),
        L.train_gbt(X, L.GbtConfig(n_rounds=10, max_depth=3), labels=yb),
        L.train_linear_svm(X, L.SvmConfig(epochs=5), labels=yb),
    ]


def test_trained_models_identical_across_backends(monkeypatch):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(150, 4)).round(2)
    yb = (X[:, 0] * X[:, 1] > 0).astype(int)
    ym = rng.integers(0, 3, size=150)
    results = {}
    for name, impl in _core.BACKENDS.items():
        for k in ("scan_gini", "scan_sse", "gibbs_sweep", "pegasos_epoch"):
            monkeypatch.setattr(_core, k, getattr(impl, k))
        results[name] = [m.to_dict() for m in _train_all(X, yb, ym)]
    assert results["python"] == results["compiled"]
