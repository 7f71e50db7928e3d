from __future__ import annotations

import logging

import numpy as np

from crimelab.classifiers.base import Classifier
from crimelab.classifiers.tree import grow_tree

log = logging.getLogger(__name__)


class AdaBoost(Classifier):
    """Multiclass AdaBoost (SAMME) over weighted depth-1 trees.

    Round ``m`` fits a stump to the current weights and measures its weighted
    error ``err``.  It is accepted with weight
    ``alpha = ln((1 - err) / err) + ln(K - 1)`` and misclassified rows are
    scaled by ``exp(alpha)``.  Boosting stops early when a stump is perfect
    (it becomes the whole model) or no better than chance
    (``err >= 1 - 1/K``).  Class scores are the summed ``alpha`` of stumps
    voting for each class, normalized to sum to one.
    """

    kind = "adaboost"
    _params = ("n_estimators", "base_depth", "criterion", "seed")

    def __init__(self, n_estimators=50, base_depth=1, criterion="gini", seed=0):
        self.n_estimators = n_estimators
        self.base_depth = base_depth
        self.criterion = criterion
        self.seed = seed

    def fit(self, X, y, n_classes=None):
        X, y = self._start_fit(X, y, n_classes)
        K = max(np.unique(y).size, 2)
        n = X.shape[0]
        w = np.full(n, 1.0 / n)
        self.estimators_ = []
        self.alphas_ = []
        self.errors_ = []
        self.stop_reason_ = "n_estimators"
        for m in range(self.n_estimators):
            stump = grow_tree(X, y, self.n_classes_, criterion=self.criterion, max_depth=self.base_depth,
                              sample_weight=w)
            pred = np.argmax(stump.predict_proba(X), axis=1)
            miss = pred != y
            err = float(np.sum(w[miss]) / np.sum(w))
            self.errors_.append(err)
            if err <= 0.0:
                self.estimators_.append(stump)
                self.alphas_.append(1.0)
                self.stop_reason_ = "perfect_fit"
                break
            if err >= 1.0 - 1.0 / K:
                self.stop_reason_ = "no_better_than_chance"
                if not self.estimators_:
                    # Keep the stump so the model can still predict; the
                    # training failure is recorded in stop_reason_.
                    log.warning("first boosting round is no better than chance (err=%.4f)", err)
                    self.estimators_.append(stump)
                    self.alphas_.append(1.0)
                break
            alpha = np.log((1.0 - err) / err) + np.log(K - 1.0)
            self.estimators_.append(stump)
            self.alphas_.append(float(alpha))
            w = w * np.exp(alpha * miss)
            w /= w.sum()
        self.alphas_ = np.asarray(self.alphas_)
        return self

    def staged_predict(self, X):
        """Ensemble predictions after each accepted round."""
        X = self._check_X(X)
        votes = np.zeros((X.shape[0], self.n_classes_))
        rows = np.arange(X.shape[0])
        for stump, alpha in zip(self.estimators_, self.alphas_):
            votes[rows, np.argmax(stump.predict_proba(X), axis=1)] += alpha
            yield np.argmax(votes, axis=1)

    def predict_proba(self, X):
        X = self._check_X(X)
        votes = np.zeros((X.shape[0], self.n_classes_))
        rows = np.arange(X.shape[0])
        for stump, alpha in zip(self.estimators_, self.alphas_):
            votes[rows, np.argmax(stump.predict_proba(X), axis=1)] += alpha
        return votes / votes.sum(axis=1, keepdims=True)

    def summary(self):
        s = super().summary()
        if hasattr(self, "estimators_"):
            s.update(rounds=len(self.estimators_), stop_reason=self.stop_reason_)
        return s
