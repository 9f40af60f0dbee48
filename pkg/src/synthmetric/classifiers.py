"""Deterministic from-scratch classifiers used for utility and pMSE.

All four models expose ``predict_proba(rows) -> P(class 1)``; the hard
decision is ``proba > 0.5`` so exact ties go to class 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

from .errors import DegenerateClass, SchemaMismatch
from .tabular import Dataset, FeatureSchema


class ClassifierKind(str, Enum):
    LOGISTIC = "Logistic"
    BERNOULLI_NB = "BernoulliNB"
    KNN = "Knn"
    DECISION_TREE = "DecisionTree"

    @property
    def slug(self) -> str:
        return _SLUGS[self]


_SLUGS = {
    ClassifierKind.LOGISTIC: "logistic",
    ClassifierKind.BERNOULLI_NB: "bernoulli_nb",
    ClassifierKind.KNN: "knn",
    ClassifierKind.DECISION_TREE: "decision_tree",
}

DEFAULT_HYPERPARAMETERS: dict[ClassifierKind, dict[str, Any]] = {
    ClassifierKind.LOGISTIC: {"lr": 0.1, "epochs": 200, "l2": 1e-3},
    ClassifierKind.BERNOULLI_NB: {"alpha": 1.0},
    ClassifierKind.KNN: {"k": 5, "distance": "hamming"},
    ClassifierKind.DECISION_TREE: {"criterion": "gini", "max_depth": 4, "min_leaf": 5},
}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: ClassifierKind
    hyperparameters: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        kind = ClassifierKind(self.kind)
        object.__setattr__(self, "kind", kind)
        merged = {**DEFAULT_HYPERPARAMETERS[kind], **dict(self.hyperparameters)}
        object.__setattr__(self, "hyperparameters", merged)

    def __hash__(self) -> int:
        return hash((self.kind, tuple(sorted(self.hyperparameters.items()))))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "hyperparameters": dict(self.hyperparameters)}


class FittedClassifier:
    spec: ClassifierSpec
    schema: FeatureSchema

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass
class LogisticModel(FittedClassifier):
    spec: ClassifierSpec
    schema: FeatureSchema
    weights: np.ndarray
    bias: float

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        return expit(rows @ self.weights + self.bias)


@dataclass
class BernoulliNBModel(FittedClassifier):
    spec: ClassifierSpec
    schema: FeatureSchema
    log_prior: np.ndarray  # shape (2,)
    feature_prob: np.ndarray  # shape (2, d), P(x_j = 1 | class)

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        x = (rows >= 0.5).astype(np.float64)
        logp = np.log(self.feature_prob)
        log1mp = np.log1p(-self.feature_prob)
        joint = x @ logp.T + (1.0 - x) @ log1mp.T + self.log_prior
        return expit(joint[:, 1] - joint[:, 0])


@dataclass
class KnnModel(FittedClassifier):
    spec: ClassifierSpec
    schema: FeatureSchema
    rows: np.ndarray
    labels: np.ndarray

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        k = min(int(self.spec.hyperparameters["k"]), self.rows.shape[0])
        # L1 distance; equals Hamming distance on binary features
        dist = cdist(rows, self.rows, metric="cityblock")
        nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
        return self.labels[nearest].mean(axis=1)


@dataclass
class TreeNode:
    value: float
    n: int
    feature: int = -1
    threshold: float = 0.0
    left: TreeNode | None = None
    right: TreeNode | None = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class DecisionTreeModel(FittedClassifier):
    spec: ClassifierSpec
    schema: FeatureSchema
    root: TreeNode

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        out = np.empty(rows.shape[0])
        self._fill(self.root, rows, np.arange(rows.shape[0]), out)
        return out

    def _fill(self, node: TreeNode, rows: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
        if node.is_leaf:
            out[idx] = node.value
            return
        go_left = rows[idx, node.feature] <= node.threshold
        self._fill(node.left, rows, idx[go_left], out)
        self._fill(node.right, rows, idx[~go_left], out)

    def depth(self) -> int:
        def walk(node: TreeNode) -> int:
            return 0 if node.is_leaf else 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)


def _gini(pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    p = pos / n
    return 2.0 * p * (1.0 - p)


def _best_split(x: np.ndarray, y: np.ndarray, min_leaf: int) -> tuple[int, float, float]:
    """Return ``(feature, threshold, gain)`` of the best Gini split, or gain 0."""
    n = y.size
    parent = _gini(np.array(y.sum(), dtype=float), np.array(float(n)))
    best = (-1, 0.0, 0.0)
    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        xs, ys = x[order, j], y[order]
        cum_pos = np.cumsum(ys)
        # split after position i (left = xs[:i+1]) where the value changes
        cut = np.flatnonzero(xs[:-1] < xs[1:])
        n_left = cut + 1
        ok = (n_left >= min_leaf) & (n - n_left >= min_leaf)
        cut, n_left = cut[ok], n_left[ok]
        if cut.size == 0:
            continue
        pos_left = cum_pos[cut]
        pos_right = cum_pos[-1] - pos_left
        n_right = n - n_left
        child = (n_left * _gini(pos_left, n_left) + n_right * _gini(pos_right, n_right)) / n
        gains = parent - child
        i = int(np.argmax(gains))
        if gains[i] > best[2] + 1e-12:
            best = (j, 0.5 * (xs[cut[i]] + xs[cut[i] + 1]), float(gains[i]))
    return best


def _grow(x: np.ndarray, y: np.ndarray, depth: int, max_depth: int, min_leaf: int) -> TreeNode:
    node = TreeNode(value=float(y.mean()), n=int(y.size))
    if depth >= max_depth or y.size < 2 * min_leaf or node.value in (0.0, 1.0):
        return node
    feature, threshold, gain = _best_split(x, y, min_leaf)
    if feature < 0 or gain <= 0.0:
        return node
    left = x[:, feature] <= threshold
    node.feature, node.threshold = feature, threshold
    node.left = _grow(x[left], y[left], depth + 1, max_depth, min_leaf)
    node.right = _grow(x[~left], y[~left], depth + 1, max_depth, min_leaf)
    return node


def train(spec: ClassifierSpec, data: Dataset, seed: int = 0) -> FittedClassifier:
    """Fit ``spec`` on ``data``.

    Every model is deterministic; ``seed`` is accepted so callers can treat
    training uniformly with the other seeded stages.

    Raises:
        DegenerateClass: only one class is present.
    """
    y = data.labels.astype(np.float64)
    if y.min() == y.max():
        raise DegenerateClass("training data must contain both classes")
    x = data.rows
    hp = spec.hyperparameters

    if spec.kind is ClassifierKind.LOGISTIC:
        w = np.zeros(data.d)
        b = 0.0
        lr, l2, n = float(hp["lr"]), float(hp["l2"]), data.n
        for _ in range(int(hp["epochs"])):
            resid = expit(x @ w + b) - y
            w = w - lr * (x.T @ resid / n + l2 * w)
            b = b - lr * resid.mean()
        return LogisticModel(spec, data.schema, w, float(b))

    if spec.kind is ClassifierKind.BERNOULLI_NB:
        alpha = float(hp["alpha"])
        xb = (x >= 0.5).astype(np.float64)
        counts = np.array([np.count_nonzero(y == c) for c in (0, 1)], dtype=np.float64)
        ones = np.vstack([xb[y == c].sum(axis=0) for c in (0, 1)])
        prob = (ones + alpha) / (counts[:, None] + 2.0 * alpha)
        return BernoulliNBModel(spec, data.schema, np.log(counts / counts.sum()), prob)

    if spec.kind is ClassifierKind.KNN:
        return KnnModel(spec, data.schema, np.array(x), data.labels.astype(np.float64))

    root = _grow(np.asarray(x), y, 0, int(hp["max_depth"]), int(hp["min_leaf"]))
    return DecisionTreeModel(spec, data.schema, root)


def predict_proba(model: FittedClassifier, rows: np.ndarray | Dataset) -> np.ndarray:
    if isinstance(rows, Dataset):
        if rows.schema != model.schema:
            raise SchemaMismatch("evaluation schema differs from the training schema")
        rows = rows.rows
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != model.schema.n_features:
        raise SchemaMismatch(
            f"expected {model.schema.n_features} feature columns, got shape {rows.shape}"
        )
    return np.clip(model.predict_proba(rows), 0.0, 1.0)


def predict(model: FittedClassifier, rows: np.ndarray | Dataset) -> np.ndarray:
    return (predict_proba(model, rows) > 0.5).astype(np.int64)
