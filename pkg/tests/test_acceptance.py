"""Acceptance criteria, each checked at its stated tolerance.

Every test records a PASS/FAIL line that is printed in the terminal summary.
"""
import json
import math
import time
from collections import Counter

import numpy as np
import pytest

from complaint_insight import cli
from complaint_insight import features as F
from complaint_insight import learn as L
from complaint_insight import metrics as M
from complaint_insight import topics as T
from complaint_insight.artifacts import FORMAT_VERSION, load_model, save_model
from complaint_insight.config import PipelineConfig
from complaint_insight.errors import Corrupt, VersionUnsupported
from complaint_insight.ingest import RESPONSE_CATEGORIES
from complaint_insight.synth import SynthSpec, write_synthetic
from conftest import ACCEPTANCE_RESULTS
from oracles import all_bit_vectors, auc_pairs, central_difference, logistic_objective, two_topic_corpus


def record(number, name, ok, detail):
    ACCEPTANCE_RESULTS.append((number, bool(ok), name, detail))
    assert ok, f"criterion {number} ({name}) failed: {detail}"


def _auc_instances(n_instances=1000, seed=2024):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n_instances:
        n = int(rng.integers(2, 201))
        truth = rng.random(n) < rng.uniform(0.1, 0.9)
        if truth.all() or not truth.any():
            continue
        # coarse rounding plants deliberate ties
        scores = np.round(rng.normal(size=n) + truth * rng.uniform(0, 2), int(rng.integers(0, 3)))
        out.append((truth, scores))
    return out


@pytest.fixture(scope="module")
def auc_instances():
    return _auc_instances()


def test_01_auc_oracle(auc_instances):
    start = time.perf_counter()
    worst = max(abs(M.auc(t, s) - auc_pairs(t, s)) for t, s in auc_instances)
    elapsed = time.perf_counter() - start
    record(1, "AUC oracle equivalence", worst <= 1e-9 and elapsed < 10,
           f"max |diff| {worst:.2e} over {len(auc_instances)} instances in {elapsed:.2f} s")


def test_02_roc_consistency(auc_instances):
    worst = max(abs(M.trapezoid_area(M.roc_curve(t, s)) - M.auc(t, s)) for t, s in auc_instances)
    record(2, "ROC consistency", worst <= 1e-12, f"max |area - auc| {worst:.2e}")


def test_03_logistic_gradient():
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        n, d = int(rng.integers(1, 51)), int(rng.integers(1, 11))
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, size=n).astype(float)
        w, b, l2 = rng.normal(size=d), float(rng.normal()), float(rng.uniform(0, 0.1))
        _, gw, gb = L.logistic_loss_grad(w, b, X, y, l2)
        num = central_difference(lambda v: logistic_objective(v[:-1], v[-1], X, y, l2), np.r_[w, b])
        rel = np.linalg.norm(np.r_[gw, gb] - num) / max(np.linalg.norm(num), 1e-12)
        worst = max(worst, rel)
    elapsed = time.perf_counter() - start
    record(3, "Logistic gradient vs finite differences", worst < 1e-5 and elapsed < 5,
           f"max relative error {worst:.2e} in {elapsed:.2f} s")


def test_04_gbt_monotone_loss():
    violations, worst = 0, 0.0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(20, 201))
        d = int(rng.integers(1, 6))
        X = rng.normal(size=(n, d))
        y = (rng.random(n) < 1 / (1 + np.exp(-X.sum(axis=1) * rng.normal()))).astype(int)
        model = L.train_gbt(X, L.GbtConfig(n_rounds=50, learning_rate=0.1), labels=y)
        losses = [L.mean_log_loss(y, f) for f in model.staged_decision(X)]
        for a, b in zip(losses, losses[1:]):
            worst = max(worst, b - a)
            violations += b > a + 1e-12
    record(4, "GBT monotone training loss", violations == 0,
           f"{violations} violations over 10 datasets x 50 rounds (largest increase {worst:.2e})")


def test_05_tree_exact_fit():
    rng = np.random.default_rng(5)
    X = all_bit_vectors(4)
    failures = 0
    for _ in range(50):
        y = rng.integers(0, int(rng.integers(2, 5)), size=16)
        model = L.train_decision_tree(X, L.TreeConfig(max_depth=4, min_leaf=1), labels=y)
        failures += not np.array_equal(model.predict(X), y)
    record(5, "Tree exact-fit", failures == 0, f"{50 - failures}/50 labelings fitted exactly")


def test_06_forest_degeneracy():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(400, 4)).round(1)
    y = ((X[:, 0] > 0) + (X[:, 1] * X[:, 2] > 0.2)).astype(int)
    forest = L.train_random_forest(X, L.ForestConfig(n_trees=1, bootstrap=False, max_features="all"), labels=y)
    tree = L.train_decision_tree(X, L.TreeConfig(), labels=y)
    probe = rng.normal(size=(1000, 4)) * 1.5
    agree = float(np.mean(forest.predict(probe) == tree.predict(probe)))
    record(6, "Forest degeneracy", agree == 1.0, f"agreement {agree:.1%} on 1000 inputs")


def test_07_lda_bookkeeping():
    docs, _ = two_topic_corpus(7, n_docs=200, doc_len=50)
    corpus = T.build_corpus(docs, min_df=1, max_df_fraction=1.0)
    words, doc_ids = corpus.flat()
    V, K = len(corpus.vocabulary), 4
    bad = []

    def check(sweep, state):
        n_dk, n_kw, n_k = T.tally(words, doc_ids, state.z, len(corpus.documents), K, V)
        exact = (np.array_equal(n_dk, state.n_dk) and np.array_equal(n_kw, state.n_kw)
                 and np.array_equal(n_k, state.n_k))
        rows = max(np.abs(state.phi().sum(axis=1) - 1).max(), np.abs(state.theta().sum(axis=1) - 1).max())
        if not exact or rows > 1e-9:
            bad.append(sweep)

    T.fit_lda(corpus, T.LdaConfig(K=K, sweeps=50, seed=7), callback=check)
    record(7, "LDA bookkeeping", not bad, f"{len(corpus.documents)} documents, 50 sweeps, failing sweeps: {bad}")


def test_08_lda_recovery():
    start = time.perf_counter()
    recovered = 0
    for seed in range(5):
        docs, supports = two_topic_corpus(seed)
        corpus = T.build_corpus(docs, min_df=1, max_df_fraction=1.0)
        model = T.fit_lda(corpus, T.LdaConfig(K=2, sweeps=200, seed=seed))
        ok = all(any({w for w, _ in T.top_words(model, k, 5)} <= set(s) for s in supports) for k in range(2))
        recovered += ok
    elapsed = time.perf_counter() - start
    record(8, "LDA recovery", recovered >= 4 and elapsed < 60,
           f"{recovered}/5 seeds recovered (default alpha 50/K) in {elapsed:.2f} s")


def test_09_resampling_invariants():
    rng = np.random.default_rng(9)
    failures = 0
    for _ in range(1000):
        n = int(rng.integers(1, 80))
        labels = rng.integers(0, int(rng.integers(1, 8)), size=n)
        seed = int(rng.integers(0, 2**31))
        counts = Counter(labels.tolist())
        over = F.oversample(labels, seed)
        oc = Counter(labels[over].tolist())
        cap = int(rng.integers(1, 20))
        under = F.undersample(labels, cap, seed)
        uc = Counter(labels[under].tolist())
        ok = (set(oc.values()) == {max(counts.values())}
              and set(range(n)) <= set(over.tolist())
              and max(uc.values()) <= cap
              and all(uc[c] == min(k, cap) for c, k in counts.items())
              and len(set(under.tolist())) == len(under)
              and all(0 <= i < n for i in np.r_[over, under]))
        failures += not ok
    record(9, "Resampling invariants", failures == 0, f"{1000 - failures}/1000 label vectors")


@pytest.fixture(scope="module")
def e2e(tmp_path_factory):
    """synth 10k rows, then the full pipeline twice through the CLI."""
    root = tmp_path_factory.mktemp("e2e")
    data = root / "synth.csv"
    assert cli.main(["synth", str(data), "--rows", "10000", "--seed", "0"]) == 0
    # identical config means identical output_dir too, since the report echoes it
    out = root / "run"
    runs = []
    for i in range(2):
        start = time.perf_counter()
        code = cli.main(["train", str(data), "--out", str(out), "--seed", "0"])
        elapsed = time.perf_counter() - start
        saved = root / f"report{i}.json"
        saved.write_bytes((out / "report.json").read_bytes())
        runs.append((code, elapsed, out, saved))
    return data, runs


def test_10_split_discipline(e2e):
    ok = True
    for n in (0, 1, 9, 10, 1001):
        for seed in (0, 1):
            tr, te = F.train_test_split(n, 0.7, seed)
            tr2, te2 = F.train_test_split(n, 0.7, seed)
            ok &= len(tr) == math.floor(0.7 * n)
            ok &= not set(tr.tolist()) & set(te.tolist())
            ok &= sorted(np.r_[tr, te].tolist()) == list(range(n))
            ok &= np.array_equal(tr, tr2) and np.array_equal(te, te2)
    _, runs, = e2e
    report = json.loads((runs[0][2] / "report.json").read_text())
    train = report["split"]["train"]
    fitted = {v for sec in ("timely", "response") for v in report[sec]["encoders_fitted_on"].values()}
    ok &= fitted == {train} and train == math.floor(0.7 * report["dataset"]["row_count"])
    record(10, "Split discipline", ok, f"train {train} rows, encoders fitted on {sorted(fitted)}")


def test_11_gbt_beats_lr():
    start = time.perf_counter()
    margins = []
    for seed in range(5):
        rows = list(_synth_records(SynthSpec(rows=50_000, seed=seed, narrative_rate=0.0)))
        cfg = PipelineConfig(seed=seed)
        cfg.timely.models = ["gbt", "logistic"]
        cfg.response.enabled = False
        cfg.topics.enabled = False
        tr, te = F.train_test_split(len(rows), cfg.split_ratio, seed)
        train = [rows[i] for i in tr]
        test = [rows[i] for i in te]
        enc = F.fit_encoders(train, F.TIMELY)
        dtrain = F.build_features(train, F.TIMELY, enc)
        dtest = F.build_features(test, F.TIMELY, enc)
        fit = dtrain.subset(F.resample(dtrain.labels, cfg.timely.resampling, seed))
        gbt = L.train_gbt(fit, cfg.models.gbt)
        lr = L.train_logistic(fit, cfg.models.logistic)
        truth = dtest.labels == 1
        margins.append(M.auc(truth, gbt.decision_function(dtest.matrix))
                       - M.auc(truth, lr.decision_function(dtest.matrix)))
    elapsed = time.perf_counter() - start
    wins = sum(m >= 0.03 for m in margins)
    record(11, "Model ordering (GBT AUC > LR AUC)", wins >= 4 and elapsed < 300,
           f"AUC margins {[round(m, 3) for m in margins]}, {wins}/5 >= 0.03, {elapsed:.1f} s")


def _synth_records(spec):
    import io

    from complaint_insight.ingest import SchemaSpec, stream_records

    buf = io.StringIO(newline="")
    write_synthetic(spec, buf, SchemaSpec.default())
    yield from stream_records(io.BytesIO(buf.getvalue().encode()), SchemaSpec.default(strict=True))


def test_12_end_to_end(e2e):
    _, runs = e2e
    (code1, t1, out1, rep1), (code2, t2, _, rep2) = runs
    text = (out1 / "report.txt").read_text()
    report = json.loads((out1 / "report.json").read_text())
    imp_ok = all(abs(sum(v.values()) - 1.0) <= 1e-9
                 for sec in ("timely", "response") for v in report[sec]["feature_importance"].values())
    checks = {
        "exit codes": code1 == code2 == 0,
        "under 60 s": max(t1, t2) < 60,
        "Table-3 section": all(s in text for s in ("Comparison of Models for Binary Classification",
                                                   "Precision", "Recall", "AUC", "Computing Time")),
        "Table-4 section": "Comparison of Models for Multiclass Classification" in text
                           and all(c in text for c in RESPONSE_CATEGORIES),
        "confusion matrix": "Confusion matrix" in text,
        "importances sum to 1": imp_ok,
        "10 topics": len(report["topics"]["topics"]) == 10 and "Topic 9" in text,
        "byte-identical rerun": rep1.read_bytes() == rep2.read_bytes(),
    }
    failed = [k for k, v in checks.items() if not v]
    record(12, "End-to-end", not failed, f"runs {t1:.1f} s / {t2:.1f} s; failed checks: {failed or 'none'}")


def test_13_artifact_round_trip(e2e, tmp_path):
    _, runs = e2e
    models_dir = runs[0][2] / "models"
    rng = np.random.default_rng(13)
    mismatches = []
    paths = sorted(models_dir.glob("*.cim"))
    for path in paths:
        a = load_model(path)
        again = load_model(save_model(a, tmp_path / path.name))
        X = rng.uniform(0, 0.2, size=(1000, a.model.n_features))
        if a.task == "timely":
            X[:, 4] = rng.integers(0, 5000, size=1000)
        same = np.array_equal(a.model.predict(X), again.model.predict(X))
        if hasattr(a.model, "decision_function"):
            same &= np.array_equal(a.model.decision_function(X), again.model.decision_function(X))
        else:
            same &= np.array_equal(a.model.predict_proba(X), again.model.predict_proba(X))
        if not same:
            mismatches.append(path.name)

    raw = paths[0].read_bytes()
    truncated = tmp_path / "truncated.cim"
    truncated.write_bytes(raw[: len(raw) // 2])
    future = tmp_path / "future.cim"
    future.write_bytes(raw.replace(f"CIMODEL {FORMAT_VERSION}".encode(), b"CIMODEL 2", 1))
    rejected = []
    for path, err in ((truncated, Corrupt), (future, VersionUnsupported)):
        try:
            load_model(path)
        except err:
            rejected.append(err.__name__)
    ok = len(paths) == 5 and not mismatches and len(rejected) == 2
    record(13, "Artifact round-trip", ok,
           f"{len(paths)} models, mismatches {mismatches or 'none'}, rejected {rejected}")
