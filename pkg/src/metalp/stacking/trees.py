"""Histogram decision trees, random forests and gradient boosting.

Tree growth is delegated to :mod:`metalp.kernels`; this module only forms
the per-row statistics. A tree fitted to ``g = w*y, h = w`` with no
regularisation predicts weighted means, and its split gain is the weighted
reduction in squared error, which for 0/1 targets is proportional to the
reduction in Gini impurity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..graph import derive_rng, derive_seed
from .binning import Binner


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        return kernels.predict_tree(X, self.feature, self.threshold, self.left, self.right, self.value)

    def importances(self, n_features: int) -> np.ndarray:
        split = self.feature >= 0
        return np.bincount(self.feature[split], weights=self.gain[split], minlength=n_features)


def grow_tree(binner: Binner, codes, g, h, samples, features, *, max_depth, max_features,
              min_samples_leaf=1, min_child_weight=0.0, reg_lambda=0.0, min_gain=0.0, seed=0) -> Tree:
    f, b, left, right, value, gain, _ = kernels.build_tree(
        codes, np.ascontiguousarray(g, dtype=np.float64), np.ascontiguousarray(h, dtype=np.float64),
        np.asarray(samples, dtype=np.int64), np.asarray(features, dtype=np.int64), binner.n_bins,
        int(max_depth), int(max_features), int(min_samples_leaf), float(min_child_weight),
        float(reg_lambda), float(min_gain), int(seed))
    return Tree(f, binner.threshold(f, b), left, right, value, gain)


def _max_features(spec, d: int) -> int:
    if spec is None:
        return d
    if spec == "sqrt":
        return max(1, int(np.sqrt(d)))
    if isinstance(spec, float):
        return max(1, int(spec * d))
    return max(1, min(int(spec), d))


class RandomForest:
    """Bootstrap-aggregated CART trees (classification or regression).

    For classification ``y`` must be 0/1 and :meth:`predict` returns the mean
    leaf frequency of class 1 across trees.
    """

    def __init__(self, n_estimators=100, max_depth=None, max_features="sqrt", min_samples_leaf=1,
                 bootstrap=True, seed=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.seed = seed

    def fit(self, X, y) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, d = X.shape
        self.n_features_ = d
        self.binner_ = Binner().fit(X)
        codes = self.binner_.transform(X)
        depth = self.max_depth if self.max_depth is not None else 10**6
        mf = _max_features(self.max_features, d)
        self.trees_ = []
        for t in range(self.n_estimators):
            if self.bootstrap:
                w = np.bincount(derive_rng(self.seed, t).integers(0, n, n), minlength=n).astype(np.float64)
            else:
                w = np.ones(n)
            rows = np.flatnonzero(w > 0)
            self.trees_.append(grow_tree(
                self.binner_, codes, w * y, w, rows, np.arange(d), max_depth=depth, max_features=mf,
                min_samples_leaf=self.min_samples_leaf, seed=derive_seed(self.seed, t, 1)))
        return self

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.zeros(len(X))
        for tree in self.trees_:
            out += tree.predict(X)
        return out / len(self.trees_)

    @property
    def feature_importances_(self) -> np.ndarray:
        """Mean decrease in impurity, normalised per tree, averaged, summing to 1."""
        per_tree = []
        for tree in self.trees_:
            imp = tree.importances(self.n_features_)
            if imp.sum() > 0:
                per_tree.append(imp / imp.sum())
        if not per_tree:
            return np.full(self.n_features_, 1.0 / self.n_features_)
        mean = np.mean(per_tree, axis=0)
        return mean / mean.sum()


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class GradientBoosting:
    """Second-order boosted trees with logistic (binary) or softmax loss.

    Leaf weights are ``-sum(grad) / (sum(hess) + reg_lambda)``; a split is kept
    only if its structure-score gain exceeds ``gamma`` (each side scored as
    ``G^2 / (H + lambda)``, halved).
    """

    def __init__(self, n_estimators=100, max_depth=6, learning_rate=0.1, subsample=1.0,
                 colsample=1.0, gamma=0.0, reg_lambda=1.0, min_child_weight=1.0, seed=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.subsample = subsample
        self.colsample = colsample
        self.gamma = gamma
        self.reg_lambda = reg_lambda
        self.min_child_weight = min_child_weight
        self.seed = seed

    def fit(self, X, y) -> "GradientBoosting":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y).astype(np.int64)
        n, d = X.shape
        self.classes_ = np.unique(y)
        if len(self.classes_) < 2:
            raise ValueError("boosting needs at least two classes")
        K = len(self.classes_)
        onehot = (y[:, None] == self.classes_[None, :]).astype(np.float64)
        self.n_features_ = d
        self.binner_ = Binner().fit(X)
        codes = self.binner_.transform(X)
        n_out = 1 if K == 2 else K
        F = np.zeros((n, n_out))
        ncol = max(1, int(round(self.colsample * d)))
        nrow = max(1, int(round(self.subsample * n)))
        self.trees_ = []
        for t in range(self.n_estimators):
            rng = derive_rng(self.seed, t)
            rows = np.arange(n) if nrow >= n else np.sort(rng.choice(n, nrow, replace=False))
            feats = np.arange(d) if ncol >= d else np.sort(rng.choice(d, ncol, replace=False))
            if K == 2:
                p = _sigmoid(F[:, 0])
                grads = [(p - onehot[:, 1], p * (1 - p))]
            else:
                P = _softmax(F)
                grads = [(P[:, k] - onehot[:, k], P[:, k] * (1 - P[:, k])) for k in range(K)]
            round_trees = []
            for k, (grad, hess) in enumerate(grads):
                tree = grow_tree(self.binner_, codes, -grad, hess, rows, feats,
                                 max_depth=self.max_depth, max_features=len(feats),
                                 min_child_weight=self.min_child_weight, reg_lambda=self.reg_lambda,
                                 min_gain=2.0 * self.gamma, seed=derive_seed(self.seed, t, k))
                tree.value = tree.value * self.learning_rate
                F[:, k] += tree.predict(X)
                round_trees.append(tree)
            self.trees_.append(round_trees)
        return self

    def decision_function(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        F = np.zeros((len(X), len(self.trees_[0]) if self.trees_ else 1))
        for round_trees in self.trees_:
            for k, tree in enumerate(round_trees):
                F[:, k] += tree.predict(X)
        return F

    def predict_proba(self, X) -> np.ndarray:
        F = self.decision_function(X)
        if len(self.classes_) == 2:
            p = _sigmoid(F[:, 0])
            return np.stack([1 - p, p], axis=1)
        return _softmax(F)

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
