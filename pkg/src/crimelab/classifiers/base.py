from __future__ import annotations

import numpy as np

from crimelab.errors import DataError, SchemaError


class Classifier:
    """Minimal fit/predict contract shared by every model and ensemble.

    Subclasses list their constructor arguments in ``_params`` so that
    :meth:`clone` can rebuild an unfitted copy.  Probabilities always have one
    column per class code ``0..n_classes_-1``, even for classes absent from the
    training rows, so models fitted on subsets stay comparable.
    """

    _params: tuple[str, ...] = ()
    kind = "classifier"

    def get_params(self) -> dict:
        return {p: getattr(self, p) for p in self._params}

    def clone(self, **overrides) -> "Classifier":
        params = self.get_params()
        params.update(overrides)
        return type(self)(**params)

    def _start_fit(self, X, y, n_classes=None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise DataError("cannot fit on an empty matrix")
        if y.shape != (X.shape[0],):
            raise DataError("X and y lengths differ")
        if y.min() < 0:
            raise DataError("class codes must be non-negative")
        self.n_classes_ = int(n_classes) if n_classes is not None else int(y.max()) + 1
        if y.max() >= self.n_classes_:
            raise DataError(f"class code {y.max()} outside n_classes={self.n_classes_}")
        self.n_features_in_ = X.shape[1]
        return X, y

    def _check_X(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise SchemaError(f"model was fitted on {self.n_features_in_} columns, got shape {X.shape}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        # argmax picks the first maximum, i.e. the lowest class code on ties
        return np.argmax(self.predict_proba(X), axis=1)

    def roc_scores(self, X) -> np.ndarray:
        """Per-class ranking scores used for ROC curves."""
        return self.predict_proba(X)

    def summary(self) -> dict:
        return {"kind": self.kind, "params": _jsonable(self.get_params())}


def _jsonable(v):
    if isinstance(v, Classifier):
        return v.summary()
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def vote_counts(predictions: np.ndarray, n_classes: int, weights=None) -> np.ndarray:
    """Tally ``(n_voters, n_rows)`` class predictions into ``(n_rows, n_classes)``."""
    predictions = np.asarray(predictions, dtype=np.int64)
    n_voters, n_rows = predictions.shape
    w = np.ones(n_voters) if weights is None else np.asarray(weights, dtype=np.float64)
    tally = np.zeros((n_rows, n_classes))
    rows = np.arange(n_rows)
    for v in range(n_voters):
        np.add.at(tally, (rows, predictions[v]), w[v])
    return tally
