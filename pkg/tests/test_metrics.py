import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from complaint_insight import metrics as M
from complaint_insight.errors import IdOutOfRange, LengthMismatch, OneClassOnly
from complaint_insight.ingest import RESPONSE_CATEGORIES
from oracles import auc_pairs


def test_confusion_examples():
    cm = M.confusion_matrix([0, 1, 2], [0, 1, 2], 3)
    assert np.array_equal(cm.cells, np.eye(3, dtype=int))
    assert not M.confusion_matrix([], [], 4).cells.any()
    cm = M.confusion_matrix([0, 0, 1], [0, 1, 1], 2)
    assert cm.cells.tolist() == [[1, 1], [0, 1]]


def test_confusion_errors():
    with pytest.raises(LengthMismatch):
        M.confusion_matrix([0, 1], [0], 2)
    with pytest.raises(IdOutOfRange):
        M.confusion_matrix([0, 2], [0, 1], 2)


def test_precision_recall_examples():
    cm = M.ConfusionMatrix(("n", "p"), np.array([[50, 3], [1, 9]]))
    assert M.precision_recall(cm, 1) == pytest.approx((0.75, 0.9))
    cm = M.confusion_matrix([0, 0], [0, 0], 3)
    assert M.precision_recall(cm, 2) == (0.0, 0.0)
    assert M.precision_recall(cm, 0) == (1.0, 1.0)


def test_per_class_examples():
    cm = M.confusion_matrix([0, 1, 1, 2], [0, 1, 1, 2], 3)
    assert all(c.precision == c.recall == 1.0 for c in M.per_class_metrics(cm).classes)
    k = len(RESPONSE_CATEGORIES)
    cm = M.confusion_matrix([3, 3], [3, 3], k, RESPONSE_CATEGORIES)
    pc = M.per_class_metrics(cm)
    assert [c.name for c in pc.classes] == list(RESPONSE_CATEGORIES)
    assert (pc[RESPONSE_CATEGORIES[3]].precision, pc[RESPONSE_CATEGORIES[3]].recall) == (1.0, 1.0)
    others = [c for c in pc.classes if c.name != RESPONSE_CATEGORIES[3]]
    assert all((c.precision, c.recall, c.support) == (0, 0, 0) for c in others)
    text = pc.format()
    assert all(name in text for name in RESPONSE_CATEGORIES)


@settings(max_examples=100)
@given(st.integers(1, 6).flatmap(lambda k: st.tuples(
    st.just(k), st.lists(st.tuples(st.integers(0, k - 1), st.integers(0, k - 1)), max_size=50))))
def test_confusion_sums(case):
    k, pairs = case
    truth = [a for a, _ in pairs]
    pred = [b for _, b in pairs]
    cm = M.confusion_matrix(truth, pred, k)
    assert cm.total == len(pairs)
    pc = M.per_class_metrics(cm)
    assert pc.total_support == len(pairs)
    assert [c.support for c in pc.classes] == cm.cells.sum(axis=1).tolist()


def test_auc_examples():
    assert M.auc([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1]) == 1.0
    assert M.auc([1, 0, 1, 0], [0.3] * 4) == 0.5
    assert M.auc([1, 1, 0, 0], [0.9, 0.4, 0.8, 0.3]) == 0.75


def test_auc_one_class():
    with pytest.raises(OneClassOnly):
        M.auc([1, 1], [0.1, 0.2])
    with pytest.raises(OneClassOnly):
        M.roc_curve([0, 0], [0.1, 0.2])


def test_roc_examples():
    pts = M.roc_curve([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1])
    assert (0.0, 1.0) in pts
    assert pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)
    pts = M.roc_curve([1, 0, 1, 0], [0.5] * 4)
    assert pts == [(0.0, 0.0), (1.0, 1.0)]
    assert M.trapezoid_area(pts) == 0.5
    assert M.trapezoid_area(M.roc_curve([1, 1, 0, 0], [0.9, 0.4, 0.8, 0.3])) == 0.75


binary_case = st.integers(2, 60).flatmap(lambda n: st.tuples(
    st.lists(st.booleans(), min_size=n, max_size=n).filter(lambda t: 0 < sum(t) < len(t)),
    st.lists(st.integers(0, 8), min_size=n, max_size=n),
))


@settings(max_examples=300)
@given(binary_case)
def test_auc_matches_pairs_and_roc(case):
    truth, scores = case
    a = M.auc(truth, scores)
    assert abs(a - auc_pairs(truth, scores)) < 1e-12
    assert abs(M.trapezoid_area(M.roc_curve(truth, scores)) - a) < 1e-12


@settings(max_examples=200)
@given(st.integers(2, 60).flatmap(lambda n: st.tuples(
    st.lists(st.booleans(), min_size=n, max_size=n).filter(lambda t: 0 < sum(t) < len(t)),
    st.lists(st.integers(-1000, 1000), min_size=n, max_size=n, unique=True))))
def test_auc_symmetry_and_monotone_invariance(case):
    truth, scores = case
    s = np.array(scores, dtype=np.int64)
    a = M.auc(truth, s)
    assert M.auc(truth, -s) == pytest.approx(1 - a, abs=1e-12)
    assert M.auc(truth, s**3 + 5 * s) == pytest.approx(a, abs=1e-12)


def test_binary_metrics():
    bm = M.binary_metrics([1, 0, 1, 0], [1, 0, 0, 0], [0.9, 0.1, 0.4, 0.2])
    assert (bm.precision, bm.recall, bm.auc) == (1.0, 0.5, 1.0)
