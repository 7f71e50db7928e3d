from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from crimelab.classifiers.base import Classifier
from crimelab.classifiers.tree import grow_tree
from crimelab.rng import make_rng


def _n_features(max_features, d):
    if max_features == "sqrt":
        return max(1, int(math.sqrt(d)))
    if max_features is None:
        return d
    if isinstance(max_features, float):
        return max(1, int(math.ceil(max_features * d)))
    return min(int(max_features), d)


class _Forest(Classifier):
    """Shared machinery: per-tree seed streams, optional threading, averaging."""

    criterion = "entropy"
    splitter = "best"
    bootstrap = True
    _params = ("n_trees", "max_depth", "criterion", "max_features", "bootstrap", "min_samples_leaf",
               "oob_score", "n_jobs", "seed")

    def __init__(self, n_trees=100, max_depth=7, criterion=None, max_features="sqrt", bootstrap=None,
                 min_samples_leaf=1, oob_score=False, n_jobs=1, seed=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.criterion = criterion or type(self).criterion
        self.max_features = max_features
        self.bootstrap = type(self).bootstrap if bootstrap is None else bootstrap
        self.min_samples_leaf = min_samples_leaf
        self.oob_score = oob_score
        self.n_jobs = n_jobs
        self.seed = seed

    def _grow(self, t, X, y):
        rng = make_rng(self.seed, t)
        n = X.shape[0]
        rows = rng.integers(0, n, size=n) if self.bootstrap else None
        Xt, yt = (X[rows], y[rows]) if rows is not None else (X, y)
        tree = grow_tree(Xt, yt, self.n_classes_, criterion=self.criterion, max_depth=self.max_depth,
                         min_samples_leaf=self.min_samples_leaf,
                         max_features=_n_features(self.max_features, X.shape[1]),
                         splitter=self.splitter, rng=rng)
        return tree, rows

    def fit(self, X, y, n_classes=None):
        X, y = self._start_fit(X, y, n_classes)
        if self.n_jobs and self.n_jobs > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                grown = list(pool.map(lambda t: self._grow(t, X, y), range(self.n_trees)))
        else:
            grown = [self._grow(t, X, y) for t in range(self.n_trees)]
        self.trees_ = [tree for tree, _ in grown]
        if self.oob_score and self.bootstrap:
            self._compute_oob(X, y, [rows for _, rows in grown])
        return self

    def _compute_oob(self, X, y, bags):
        n = X.shape[0]
        votes = np.zeros((n, self.n_classes_))
        for tree, rows in zip(self.trees_, bags):
            out = np.ones(n, dtype=bool)
            out[rows] = False
            if out.any():
                votes[out] += tree.predict_proba(X[out])
        seen = votes.sum(axis=1) > 0
        self.oob_decision_ = votes
        self.oob_score_ = float(np.mean(np.argmax(votes[seen], axis=1) == y[seen])) if seen.any() else float("nan")

    def predict_proba(self, X):
        X = self._check_X(X)
        proba = np.zeros((X.shape[0], self.n_classes_))
        for tree in self.trees_:
            proba += tree.predict_proba(X)
        return proba / len(self.trees_)

    def summary(self):
        s = super().summary()
        if hasattr(self, "trees_"):
            s.update(trees=len(self.trees_), max_tree_depth=max(t.max_depth for t in self.trees_))
        return s


class RandomForest(_Forest):
    """Bootstrap forest, entropy splits, sqrt(d) columns per split, depth <= 7.

    Prediction is the argmax of the averaged leaf class frequencies.
    """

    kind = "random_forest"
    criterion = "entropy"
    bootstrap = True


class ExtraTrees(_Forest):
    """Extremely randomized trees: whole training set, one random cut per column, Gini."""

    kind = "extra_trees"
    criterion = "gini"
    splitter = "random"
    bootstrap = False
