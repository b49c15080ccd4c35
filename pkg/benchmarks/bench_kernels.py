"""Compare the compiled kernels with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Each line reports the best-of-N wall time per backend and the speedup.
Results from both backends are also checked for bit-identity.
"""
import argparse
import time

import numpy as np

from complaint_insight import _core
from complaint_insight import learn as L
from complaint_insight import topics as T

KERNELS = ("scan_gini", "scan_sse", "gibbs_sweep", "pegasos_epoch")


def use(backend):
    impl = _core.BACKENDS[backend]
    for name in KERNELS:
        setattr(_core, name, getattr(impl, name))


def best_of(fn, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def cases(scale):
    rng = np.random.default_rng(0)
    n = int(20_000 * scale)
    X = rng.normal(size=(n, 5)).round(2)
    yb = ((X[:, 0] > 0) ^ (X[:, 1] > 0.3)).astype(np.int64)
    ym = rng.integers(0, 8, size=n)
    xs = np.sort(X[:, 0])

    docs = []
    vocab = [f"w{i}" for i in range(500)]
    for _ in range(int(500 * scale)):
        docs.append([vocab[j] for j in rng.integers(0, 500, size=60)])
    corpus = T.build_corpus(docs, min_df=1, max_df_fraction=1.0)

    Xa, _, _ = L.svm_design(X)
    y_pm = np.where(yb == 1, 1.0, -1.0)
    order = rng.permutation(n).astype(np.int64)

    def pegasos():
        w = np.zeros(Xa.shape[1])
        _core.pegasos_epoch(Xa, y_pm, w, order, 0, 1e-4, True)
        return w.tobytes()

    return {
        "scan_gini (n=%d)" % n: lambda: _core.scan_gini(xs, ym, 8, 5),
        "scan_sse (n=%d)" % n: lambda: _core.scan_sse(xs, yb - 0.5, 1),
        "pegasos epoch (n=%d)" % n: pegasos,
        "decision tree fit": lambda: L.train_decision_tree(X, L.TreeConfig(), labels=ym).to_dict(),
        "gbt fit (20 rounds)": lambda: L.train_gbt(X, L.GbtConfig(n_rounds=20), labels=yb).to_dict(),
        "lda fit (%d tokens, 20 sweeps)" % corpus.n_tokens:
            lambda: T.fit_lda(corpus, T.LdaConfig(K=10, sweeps=20)).z.tobytes(),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="multiplies the problem sizes")
    args = ap.parse_args(argv)

    backends = sorted(_core.BACKENDS)
    if "compiled" not in backends:
        print("compiled kernels are not built; only the python backend is available")
    print(f"{'case':<36}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}  identical")
    for name, fn in cases(args.scale).items():
        times, results = {}, {}
        for b in backends:
            use(b)
            times[b], results[b] = best_of(fn, args.repeat)
        same = len({repr(r) for r in results.values()}) == 1
        speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        print(f"{name:<36}" + "".join(f"{times[b]:11.4f}s" for b in backends) + f"{speed:9.1f}x  {same}")
    use(_core.BACKEND)


if __name__ == "__main__":
    main()
