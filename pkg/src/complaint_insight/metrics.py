"""Confusion matrices, precision/recall and ROC/AUC."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import IdOutOfRange, LengthMismatch, OneClassOnly


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are the true class, columns the predicted class."""

    class_names: tuple
    cells: np.ndarray

    @property
    def total(self) -> int:
        return int(self.cells.sum())

    def to_dict(self) -> dict:
        return {"class_names": list(self.class_names), "cells": self.cells.tolist()}


@dataclass(frozen=True)
class BinaryMetrics:
    precision: float
    recall: float
    auc: float
    positive_class: int = 1

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "auc": self.auc,
            "positive_class": self.positive_class,
        }


@dataclass(frozen=True)
class ClassMetrics:
    name: str
    precision: float
    recall: float
    support: int


@dataclass(frozen=True)
class PerClassMetrics:
    classes: tuple

    def __getitem__(self, name) -> ClassMetrics:
        for c in self.classes:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def total_support(self) -> int:
        return sum(c.support for c in self.classes)

    def to_dict(self) -> dict:
        return {
            c.name: {"precision": c.precision, "recall": c.recall, "support": c.support}
            for c in self.classes
        }

    def format(self, title: str = "") -> str:
        width = max([len(c.name) for c in self.classes] + [5])
        lines = [title] if title else []
        lines.append(f"{'Class':<{width}}  Precision  Recall  Support")
        for c in self.classes:
            lines.append(f"{c.name:<{width}}  {c.precision:9.2f}  {c.recall:6.2f}  {c.support:7d}")
        return "\n".join(lines)


def confusion_matrix(truth, pred, k: int, class_names=None) -> ConfusionMatrix:
    truth = np.asarray(truth, dtype=np.int64).ravel()
    pred = np.asarray(pred, dtype=np.int64).ravel()
    if truth.shape != pred.shape:
        raise LengthMismatch(f"{truth.size} truths vs {pred.size} predictions")
    if truth.size and (min(truth.min(), pred.min()) < 0 or max(truth.max(), pred.max()) >= k):
        raise IdOutOfRange(f"class ids must lie in [0, {k})")
    cells = np.bincount(truth * k + pred, minlength=k * k).reshape(k, k)
    names = tuple(class_names) if class_names is not None else tuple(str(i) for i in range(k))
    return ConfusionMatrix(names, cells.astype(np.int64))


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def precision_recall(cm: ConfusionMatrix, cls: int) -> tuple:
    """One-vs-rest precision and recall; a zero denominator yields 0."""
    cells = cm.cells
    tp = int(cells[cls, cls])
    return _ratio(tp, int(cells[:, cls].sum())), _ratio(tp, int(cells[cls, :].sum()))


def per_class_metrics(cm: ConfusionMatrix) -> PerClassMetrics:
    out = []
    for i, name in enumerate(cm.class_names):
        p, r = precision_recall(cm, i)
        out.append(ClassMetrics(name, p, r, int(cm.cells[i].sum())))
    return PerClassMetrics(tuple(out))


def _check_binary(truth, scores):
    truth = np.asarray(truth).ravel().astype(bool)
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if truth.shape != scores.shape:
        raise LengthMismatch(f"{truth.size} labels vs {scores.size} scores")
    n_pos = int(truth.sum())
    if n_pos == 0 or n_pos == truth.size:
        raise OneClassOnly("AUC needs both classes present")
    return truth, scores, n_pos, truth.size - n_pos


def auc(truth, scores) -> float:
    """Mann-Whitney AUC from midranks: P(score_pos > score_neg) with ties
    counted as one half."""
    truth, scores, n_pos, n_neg = _check_binary(truth, scores)
    ranks = rankdata(scores, method="average")
    u = ranks[truth].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(truth, scores) -> list:
    """(fpr, tpr) points at each distinct threshold, highest score first,
    from (0, 0) to (1, 1)."""
    truth, scores, n_pos, n_neg = _check_binary(truth, scores)
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    t = truth[order]
    tps = np.cumsum(t)
    fps = np.cumsum(~t)
    # last position of each run of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    points = [(0.0, 0.0)]
    points += [(fps[i] / n_neg, tps[i] / n_pos) for i in ends]
    return [(float(a), float(b)) for a, b in points]


def trapezoid_area(points) -> float:
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def binary_metrics(truth, pred, scores, positive: int = 1) -> BinaryMetrics:
    cm = confusion_matrix(truth, pred, 2)
    p, r = precision_recall(cm, positive)
    t = np.asarray(truth) == positive
    return BinaryMetrics(p, r, auc(t, scores), positive)
