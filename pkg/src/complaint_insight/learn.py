"""From-scratch learners: CART tree, random forest, gradient-boosted trees,
logistic regression and a Pegasos linear SVM.

Features are numeric (frequency-encoded categoricals plus a day count), so
trees split on thresholds only: ``x < threshold`` goes left.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import expit

from . import _core
from ._core._fallback import tie_floor
from .errors import EmptyDataset, EmptyNode, NotBinary, WidthMismatch

PROB_CLIP = 1e-6
LEAF = -1


# ---------------------------------------------------------------------------
# configuration

@dataclass
class TreeConfig:
    max_depth: int = 12
    min_leaf: int = 5

    def __post_init__(self):
        if self.max_depth < 0 or self.min_leaf < 1:
            raise ValueError("max_depth must be >= 0 and min_leaf >= 1")


@dataclass
class ForestConfig:
    n_trees: int = 100
    max_features: Union[str, int] = "sqrt"
    bootstrap: bool = True
    max_depth: int = 12
    min_leaf: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 0 or self.min_leaf < 1:
            raise ValueError("n_trees and min_leaf must be >= 1, max_depth >= 0")


@dataclass
class GbtConfig:
    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 5
    min_leaf: int = 1

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.n_rounds < 0 or self.max_depth < 0 or self.min_leaf < 1:
            raise ValueError("bad GBT bounds")


@dataclass
class LogisticConfig:
    epochs: int = 300
    step: float = 0.1
    l2: float = 1e-4

    def __post_init__(self):
        if self.epochs < 0 or self.step <= 0 or self.l2 < 0:
            raise ValueError("bad logistic-regression bounds")


@dataclass
class SvmConfig:
    lam: float = 1e-4
    epochs: int = 20
    seed: int = 0
    project: bool = True

    def __post_init__(self):
        if self.lam <= 0 or self.epochs < 0:
            raise ValueError("lam must be > 0 and epochs >= 0")


# ---------------------------------------------------------------------------
# split search

def gini_impurity(class_counts) -> float:
    counts = np.asarray(class_counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise EmptyNode("gini impurity of an empty node")
    p = counts / total
    return float(1.0 - np.dot(p, p))


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    decrease: float


def _best_split(X, idx, features, scan, target, extra):
    found = []
    for f in features:
        col = X[idx, f]
        order = np.argsort(col, kind="stable")
        xs = np.ascontiguousarray(col[order])
        ok, thr, dec = scan(xs, np.ascontiguousarray(target[idx[order]]), *extra)
        if ok:
            found.append(Split(int(f), thr, dec))
    if not found:
        return None
    # decreases equal up to rounding are ties: the lowest feature wins
    floor = tie_floor(max(s.decrease for s in found))
    return next(s for s in found if s.decrease >= floor)


def best_split(rows, labels, features=None, min_leaf: int = 1, n_classes: Optional[int] = None) -> Optional[Split]:
    """Exhaustive Gini split search over midpoints of consecutive distinct
    values. Ties go to the lowest feature index, then the lowest threshold.
    Returns ``None`` when no feature has two distinct values."""
    X = np.ascontiguousarray(rows, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if features is None:
        features = range(X.shape[1])
    if n_classes is None:
        n_classes = int(y.max()) + 1 if y.size else 1
    idx = np.arange(X.shape[0])
    return _best_split(X, idx, sorted(features), _core.scan_gini, y, (n_classes, min_leaf))


# ---------------------------------------------------------------------------
# tree structure

@dataclass(frozen=True)
class Tree:
    """Flat array tree. ``value`` holds class counts (classification) or a
    single real leaf value (regression); ``gain`` is node size times
    impurity decrease for internal nodes."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    gain: np.ndarray
    n_features: int

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def apply(self, X) -> np.ndarray:
        X = _as_matrix(X, self.n_features)
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            ids = node[active]
            go_left = X[active, self.feature[ids]] < self.threshold[ids]
            node[active] = np.where(go_left, self.left[ids], self.right[ids])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def importances(self) -> np.ndarray:
        imp = np.zeros(self.n_features)
        internal = self.feature != LEAF
        np.add.at(imp, self.feature[internal], self.gain[internal])
        return imp

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
            "gain": self.gain.tolist(),
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, d) -> "Tree":
        return cls(
            feature=np.array(d["feature"], dtype=np.intp),
            threshold=np.array(d["threshold"], dtype=np.float64),
            left=np.array(d["left"], dtype=np.intp),
            right=np.array(d["right"], dtype=np.intp),
            value=np.array(d["value"], dtype=np.float64).reshape(len(d["feature"]), -1),
            n_samples=np.array(d["n_samples"], dtype=np.int64),
            gain=np.array(d["gain"], dtype=np.float64),
            n_features=int(d["n_features"]),
        )


def _as_matrix(X, width) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != width:
        raise WidthMismatch(f"expected {width} features, got {X.shape[1]}")
    return X


def _grow(X, idx, max_depth, min_leaf, scan, target, extra, is_pure, leaf_value,
          rng=None, max_features=None) -> Tree:
    d = X.shape[1]
    feat, thr, left, right, value, n_samp, gain = [], [], [], [], [], [], []
    stack = [(idx, 0, -1, False)]
    while stack:
        node_idx, depth, parent, is_right = stack.pop()
        nid = len(feat)
        if parent >= 0:
            (right if is_right else left)[parent] = nid
        feat.append(LEAF)
        thr.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(leaf_value(node_idx))
        n_samp.append(len(node_idx))
        gain.append(0.0)

        if depth >= max_depth or len(node_idx) < 2 * min_leaf or is_pure(node_idx):
            continue
        if rng is not None and max_features < d:
            cands = np.sort(rng.choice(d, size=max_features, replace=False))
        else:
            cands = range(d)
        split = _best_split(X, node_idx, cands, scan, target, extra)
        if split is None:
            continue
        feat[nid] = split.feature
        thr[nid] = split.threshold
        gain[nid] = len(node_idx) * split.decrease
        goes_left = X[node_idx, split.feature] < split.threshold
        # right pushed first so the left subtree is numbered first
        stack.append((node_idx[~goes_left], depth + 1, nid, True))
        stack.append((node_idx[goes_left], depth + 1, nid, False))

    return Tree(
        feature=np.array(feat, dtype=np.intp),
        threshold=np.array(thr, dtype=np.float64),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        value=np.array(value, dtype=np.float64).reshape(len(feat), -1),
        n_samples=np.array(n_samp, dtype=np.int64),
        gain=np.array(gain, dtype=np.float64),
        n_features=d,
    )


def _check_dataset(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyDataset("need at least one training row")
    if y.shape[0] != X.shape[0]:
        raise ValueError("rows and labels differ in length")
    return X, y


def _unpack(dataset, labels):
    if labels is None:
        return dataset.matrix, dataset.labels, dataset.n_classes
    y = np.asarray(labels, dtype=np.int64)
    return dataset, y, int(y.max()) + 1 if y.size else 1


def _classification_tree(X, y, n_classes, max_depth, min_leaf, rng=None, max_features=None) -> Tree:
    def is_pure(ix):
        return ix.size == 0 or np.all(y[ix] == y[ix[0]])

    def leaf_value(ix):
        return np.bincount(y[ix], minlength=n_classes).astype(np.float64)

    return _grow(X, np.arange(X.shape[0]), max_depth, min_leaf, _core.scan_gini, y,
                 (n_classes, min_leaf), is_pure, leaf_value, rng, max_features)


# ---------------------------------------------------------------------------
# decision tree

@dataclass(frozen=True)
class DecisionTreeModel:
    tree: Tree
    n_classes: int
    params: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return self.tree.n_features

    def predict_proba(self, X) -> np.ndarray:
        counts = self.tree.value[self.tree.apply(X)]
        return counts / counts.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.tree.value[self.tree.apply(X)], axis=1)

    def feature_importances(self) -> np.ndarray:
        return _normalized(self.tree.importances())

    def to_dict(self) -> dict:
        return {"tree": self.tree.to_dict(), "n_classes": self.n_classes, "params": self.params}

    @classmethod
    def from_dict(cls, d) -> "DecisionTreeModel":
        return cls(Tree.from_dict(d["tree"]), int(d["n_classes"]), dict(d["params"]))


def train_decision_tree(dataset, cfg: TreeConfig = TreeConfig(), labels=None, n_classes=None) -> DecisionTreeModel:
    """Greedy CART with Gini splits. Accepts an ``EncodedDataset`` or a raw
    matrix plus ``labels``."""
    X, y, k = _unpack(dataset, labels)
    X, y = _check_dataset(X, y)
    k = n_classes or k
    tree = _classification_tree(X, y, k, cfg.max_depth, cfg.min_leaf)
    return DecisionTreeModel(tree, k, asdict(cfg))


def predict_tree(model: DecisionTreeModel, vector):
    """Class id and normalized leaf distribution for one input vector."""
    proba = model.predict_proba(np.asarray(vector, dtype=np.float64)[None, :])[0]
    return int(np.argmax(proba)), proba


# ---------------------------------------------------------------------------
# random forest

def resolve_max_features(rule, d: int) -> int:
    if rule in (None, "all"):
        return d
    if rule == "sqrt":
        return max(1, math.ceil(math.sqrt(d)))
    m = int(rule)
    if m < 1:
        raise ValueError("max_features must be >= 1")
    return min(m, d)


def tree_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class RandomForestModel:
    trees: tuple
    seeds: tuple
    max_features: int
    n_classes: int
    params: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def _votes(self, X) -> np.ndarray:
        X = _as_matrix(X, self.n_features)
        votes = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for t in self.trees:
            pred = np.argmax(t.value[t.apply(X)], axis=1)
            np.add.at(votes, (rows, pred), 1)
        return votes

    def predict(self, X) -> np.ndarray:
        # argmax takes the first maximum: ties go to the lowest class id
        return np.argmax(self._votes(X), axis=1)

    def predict_proba(self, X) -> np.ndarray:
        return self._votes(X) / float(len(self.trees))

    def feature_importances(self) -> np.ndarray:
        return _mean_importances(self.trees)

    def to_dict(self) -> dict:
        return {
            "trees": [t.to_dict() for t in self.trees],
            "seeds": list(self.seeds),
            "max_features": self.max_features,
            "n_classes": self.n_classes,
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, d) -> "RandomForestModel":
        return cls(tuple(Tree.from_dict(t) for t in d["trees"]), tuple(d["seeds"]),
                   int(d["max_features"]), int(d["n_classes"]), dict(d["params"]))


def majority_vote(votes, n_classes: Optional[int] = None) -> int:
    counts = np.bincount(np.asarray(votes, dtype=np.int64), minlength=n_classes or 0)
    return int(np.argmax(counts))


def train_random_forest(dataset, cfg: ForestConfig = ForestConfig(), labels=None, n_classes=None) -> RandomForestModel:
    X, y, k = _unpack(dataset, labels)
    X, y = _check_dataset(X, y)
    k = n_classes or k
    n, d = X.shape
    m = resolve_max_features(cfg.max_features, d)
    trees, seeds = [], []
    for i in range(cfg.n_trees):
        s = tree_seed(cfg.seed, i)
        rng = np.random.default_rng(s)
        if cfg.bootstrap:
            sample = rng.integers(0, n, size=n)
            Xt, yt = X[sample], y[sample]
        else:
            Xt, yt = X, y
        trees.append(_classification_tree(Xt, yt, k, cfg.max_depth, cfg.min_leaf, rng, m))
        seeds.append(s)
    return RandomForestModel(tuple(trees), tuple(seeds), m, k, asdict(cfg))


# ---------------------------------------------------------------------------
# gradient-boosted trees

def _clip_prob(p):
    return np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)


def mean_log_loss(y, scores) -> float:
    """Mean binary log-loss from raw log-odds (numerically stable)."""
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(scores, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


@dataclass(frozen=True)
class GbtModel:
    base_score: float
    trees: tuple
    learning_rate: float
    n_features: int
    params: dict = field(default_factory=dict)

    def staged_decision(self, X):
        """Yields the raw score after 0, 1, ..., n_rounds trees."""
        X = _as_matrix(X, self.n_features)
        f = np.full(X.shape[0], self.base_score)
        yield f.copy()
        for t in self.trees:
            f = f + self.learning_rate * t.value[t.apply(X), 0]
            yield f.copy()

    def decision_function(self, X) -> np.ndarray:
        f = None
        for f in self.staged_decision(X):
            pass
        return f

    def predict_proba(self, X) -> np.ndarray:
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        return (expit(self.decision_function(X)) >= threshold).astype(np.int64)

    def feature_importances(self) -> np.ndarray:
        return _mean_importances(self.trees, self.n_features)

    def to_dict(self) -> dict:
        return {
            "base_score": self.base_score,
            "trees": [t.to_dict() for t in self.trees],
            "learning_rate": self.learning_rate,
            "n_features": self.n_features,
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, d) -> "GbtModel":
        return cls(float(d["base_score"]), tuple(Tree.from_dict(t) for t in d["trees"]),
                   float(d["learning_rate"]), int(d["n_features"]), dict(d["params"]))


def _require_binary(y):
    if y.size and not np.all((y == 0) | (y == 1)):
        raise NotBinary("labels must be 0/1")


def train_gbt(dataset, cfg: GbtConfig = GbtConfig(), labels=None) -> GbtModel:
    """Binary log-loss boosting. Each round fits a squared-error regression
    tree to the residuals ``y - p`` and sets Newton leaf values
    ``sum(residual) / sum(p (1 - p))``."""
    X, y, _ = _unpack(dataset, labels)
    X, y = _check_dataset(X, y)
    _require_binary(y)
    pbar = float(np.clip(y.mean(), PROB_CLIP, 1.0 - PROB_CLIP))
    base = math.log(pbar / (1.0 - pbar))
    yf = y.astype(np.float64)
    f = np.full(X.shape[0], base)
    trees = []
    for _ in range(cfg.n_rounds):
        p = expit(f)
        resid = yf - p
        hess = p * (1.0 - p)

        def is_pure(ix, resid=resid):
            return ix.size == 0 or np.all(resid[ix] == resid[ix[0]])

        def leaf_value(ix, resid=resid, hess=hess):
            return [resid[ix].sum() / max(hess[ix].sum(), 1e-12)]

        tree = _grow(X, np.arange(X.shape[0]), cfg.max_depth, cfg.min_leaf, _core.scan_sse,
                     resid, (cfg.min_leaf,), is_pure, leaf_value)
        f = f + cfg.learning_rate * tree.value[tree.apply(X), 0]
        trees.append(tree)
    return GbtModel(base, tuple(trees), cfg.learning_rate, X.shape[1], asdict(cfg))


# ---------------------------------------------------------------------------
# linear models

@dataclass(frozen=True)
class LinearModel:
    """``weights`` act on standardized inputs ``(x - x_mean) / x_scale``."""

    weights: np.ndarray
    bias: float
    kind: str
    x_mean: np.ndarray
    x_scale: np.ndarray

    @property
    def n_features(self) -> int:
        return int(self.weights.shape[0])

    def decision_function(self, X) -> np.ndarray:
        X = _as_matrix(X, self.n_features)
        return ((X - self.x_mean) / self.x_scale) @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        if self.kind != "logistic":
            raise TypeError("the SVM produces margins, not probabilities")
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        z = self.decision_function(X)
        if self.kind == "logistic":
            return (expit(z) >= threshold).astype(np.int64)
        return (z >= 0.0).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "kind": self.kind,
            "x_mean": self.x_mean.tolist(),
            "x_scale": self.x_scale.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "LinearModel":
        return cls(np.array(d["weights"], dtype=np.float64), float(d["bias"]), d["kind"],
                   np.array(d["x_mean"], dtype=np.float64), np.array(d["x_scale"], dtype=np.float64))


def standardizer(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def logistic_loss_grad(w, b, X, y, l2: float = 0.0):
    """Mean log-loss plus ``l2/2 * |w|^2``, with gradients in ``w`` and ``b``."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(w, w))
    err = expit(z) - y
    n = X.shape[0]
    return loss, X.T @ err / n + l2 * w, float(err.sum() / n)


def train_logistic(dataset, cfg: LogisticConfig = LogisticConfig(), labels=None) -> LinearModel:
    X, y, _ = _unpack(dataset, labels)
    X, y = _check_dataset(X, y)
    _require_binary(y)
    mean, scale = standardizer(X)
    Z = (X - mean) / scale
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(cfg.epochs):
        _, gw, gb = logistic_loss_grad(w, b, Z, y, cfg.l2)
        w = w - cfg.step * gw
        b = b - cfg.step * gb
    return LinearModel(w, b, "logistic", mean, scale)


def hinge_objective(w_aug, Xa, y_pm, lam: float) -> float:
    """``lam/2 |w|^2 + mean(max(0, 1 - y w.x))`` on bias-augmented inputs."""
    margins = y_pm * (Xa @ w_aug)
    return float(0.5 * lam * np.dot(w_aug, w_aug) + np.mean(np.maximum(0.0, 1.0 - margins)))


def svm_design(model_or_X, X=None):
    """Standardized inputs with a trailing constant column (the bias is
    learned as a regularized weight)."""
    if X is None:
        X = model_or_X
        mean, scale = standardizer(X)
    else:
        mean, scale = model_or_X.x_mean, model_or_X.x_scale
    Z = (np.asarray(X, dtype=np.float64) - mean) / scale
    return np.ascontiguousarray(np.column_stack([Z, np.ones(Z.shape[0])])), mean, scale


def train_linear_svm(dataset, cfg: SvmConfig = SvmConfig(), labels=None) -> LinearModel:
    """Pegasos stochastic subgradient descent, step ``1/(lam t)``."""
    X, y, _ = _unpack(dataset, labels)
    X, y = _check_dataset(X, y)
    _require_binary(y)
    Xa, mean, scale = svm_design(X)
    y_pm = np.where(y == 1, 1.0, -1.0)
    w = np.zeros(Xa.shape[1])
    rng = np.random.default_rng(cfg.seed)
    t = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(Xa.shape[0]).astype(np.int64)
        t = _core.pegasos_epoch(Xa, y_pm, w, order, t, cfg.lam, cfg.project)
    return LinearModel(w[:-1].copy(), float(w[-1]), "svm", mean, scale)


# ---------------------------------------------------------------------------
# importance

def _normalized(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    s = v.sum()
    return v / s if s > 0 else np.zeros_like(v)


def _mean_importances(trees: Sequence[Tree], width: Optional[int] = None) -> np.ndarray:
    if not trees:
        return np.zeros(width or 0)
    return _normalized(np.mean([_normalized(t.importances()) for t in trees], axis=0))


def feature_importance(model) -> dict:
    """Feature index -> share of total impurity decrease (sums to 1, or all
    zeros for a model without splits)."""
    return {i: float(v) for i, v in enumerate(model.feature_importances())}
