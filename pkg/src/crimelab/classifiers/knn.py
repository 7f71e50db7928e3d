from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from crimelab.classifiers.base import Classifier
from crimelab.errors import DataError
from crimelab.neighbors import kneighbors


class KNearestNeighbors(Classifier):
    """Uniform-weight Euclidean k-NN.

    Distance ties go to the lower training-row index and vote ties to the lower
    class code.
    """

    kind = "knn"
    _params = ("k", "weights", "metric", "method")

    def __init__(self, k=5, weights="uniform", metric="euclidean", method="auto"):
        if weights != "uniform" or metric != "euclidean":
            raise ValueError("only uniform weights with the euclidean metric are supported")
        self.k = k
        self.weights = weights
        self.metric = metric
        self.method = method

    def fit(self, X, y, n_classes=None):
        X, y = self._start_fit(X, y, n_classes)
        if self.k > X.shape[0]:
            raise DataError(f"k={self.k} exceeds the {X.shape[0]} training rows")
        self.X_ = X.copy()
        self.y_ = y.copy()
        self._tree = None
        return self

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_tree"] = None
        return state

    def kneighbors(self, X):
        X = self._check_X(X)
        method = self.method
        if method == "auto":
            method = "brute" if self.X_.shape[0] * X.shape[0] <= 2_000_000 else "tree"
        if method == "tree" and self._tree is None:
            self._tree = cKDTree(self.X_)
        return kneighbors(self.X_, X, self.k, method=method, tree=self._tree)

    def predict_proba(self, X):
        _, idx = self.kneighbors(X)
        labels = self.y_[idx]
        proba = np.zeros((idx.shape[0], self.n_classes_))
        rows = np.repeat(np.arange(idx.shape[0]), self.k)
        np.add.at(proba, (rows, labels.ravel()), 1.0)
        return proba / self.k
