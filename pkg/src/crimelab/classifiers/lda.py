from __future__ import annotations

import numpy as np

from crimelab.classifiers.base import Classifier
from crimelab.errors import DataError

SVD_TOL = 1e-9


class LinearDiscriminant(Classifier):
    """Linear discriminant analysis with a shared covariance, solved by SVD.

    The pooled within-class scatter is never formed.  Instead the centred rows
    ``x - mean[y]`` (columns standardized, scaled by ``1/sqrt(n - K)``) go
    through an SVD; singular values below ``tol * largest`` are dropped, which
    gives a whitening map ``W`` with ``W @ W.T`` equal to the pseudo-inverse of
    the covariance.  In whitened coordinates ``z`` the class score is

        z . m_c - |m_c|^2 / 2 + log(prior_c)

    where ``m_c`` is the whitened class mean.  Probabilities are the softmax of
    these scores.
    """

    kind = "lda"
    _params = ("solver", "tol", "min_class_rows")

    def __init__(self, solver="svd", tol=SVD_TOL, min_class_rows=2):
        if solver != "svd":
            raise ValueError("only the svd solver is implemented")
        self.solver = solver
        self.tol = tol
        self.min_class_rows = min_class_rows

    def fit(self, X, y, n_classes=None):
        X, y = self._start_fit(X, y, n_classes)
        n = X.shape[0]
        present, counts = np.unique(y, return_counts=True)
        small = counts < self.min_class_rows
        if np.any(small):
            raise DataError(f"LDA needs at least {self.min_class_rows} rows per class; "
                            f"classes {present[small].tolist()} have fewer")
        K = present.size
        if n <= K:
            raise DataError("LDA needs more rows than classes")
        means = np.zeros((K, X.shape[1]))
        for i, c in enumerate(present):
            means[i] = X[y == c].mean(axis=0)
        pos = np.searchsorted(present, y)
        centred = X - means[pos]
        std = centred.std(axis=0)
        std[std == 0] = 1.0
        scaled = centred / std / np.sqrt(n - K)
        _, s, vt = np.linalg.svd(scaled, full_matrices=False)
        rank = int(np.sum(s > self.tol * s[0])) if s.size and s[0] > 0 else 0
        self.rank_ = rank
        # z = (x - xbar) @ whiten
        self.whiten_ = (vt[:rank].T / s[:rank]) / std[:, None]
        self.xbar_ = (counts / n) @ means
        self.classes_ = present
        self.class_means_ = (means - self.xbar_) @ self.whiten_
        self.log_priors_ = np.log(counts / n)
        return self

    def decision_function(self, X):
        X = self._check_X(X)
        z = (X - self.xbar_) @ self.whiten_
        scores = z @ self.class_means_.T - 0.5 * np.sum(self.class_means_ ** 2, axis=1) + self.log_priors_
        full = np.full((X.shape[0], self.n_classes_), -np.inf)
        full[:, self.classes_] = scores
        return full

    @property
    def coef_(self):
        """Linear coefficients per present class in the input space."""
        return self.class_means_ @ self.whiten_.T

    def predict_proba(self, X):
        scores = self.decision_function(X)
        top = scores.max(axis=1, keepdims=True)
        e = np.exp(scores - top)
        return e / e.sum(axis=1, keepdims=True)
