"""Voting and bagging ensembles, and the four composite models built from them.

Ensembles reseed their members at fit time: member ``i`` gets the child seed
``derive_seed(ensemble_seed, i)``.  Results therefore depend only on the
ensemble seed, never on the order in which members are trained.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from crimelab.classifiers import (Classifier, DecisionTree, ExtraTrees, KNearestNeighbors,
                                  LinearDiscriminant, RandomForest)
from crimelab.classifiers.base import vote_counts
from crimelab.rng import derive_seed, make_rng

ENSEMBLE_KINDS = ("model1_hard_vote", "model2_bagged", "model3_weighted_soft", "model4_bag_then_vote")
MODEL3_WEIGHTS = (1.0, 2.0, 2.0)


def reseed(est: Classifier, seed: int) -> Classifier:
    """Unfitted copy of ``est``; seeded when the estimator takes a seed."""
    if "seed" in est._params:
        return est.clone(seed=seed)
    return est.clone()


def _map(fn, items, n_jobs):
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


class HardVote(Classifier):
    """Majority vote of the members' class predictions; ties go to the lowest code.

    ``predict_proba`` is the plain mean of member probabilities and is kept for
    reporting only; ranking scores (:meth:`roc_scores`) are vote fractions.
    """

    kind = "hard_vote"
    _params = ("estimators", "seed", "n_jobs")

    def __init__(self, estimators, seed=0, n_jobs=1):
        self.estimators = list(estimators)
        self.seed = seed
        self.n_jobs = n_jobs

    def fit(self, X, y, n_classes=None):
        X, y = self._start_fit(X, y, n_classes)
        members = [reseed(e, derive_seed(self.seed, i)) for i, e in enumerate(self.estimators)]
        self.estimators_ = _map(lambda m: m.fit(X, y, self.n_classes_), members, self.n_jobs)
        return self

    def member_predictions(self, X) -> np.ndarray:
        X = self._check_X(X)
        return np.vstack([m.predict(X) for m in self.estimators_])

    def roc_scores(self, X):
        return vote_counts(self.member_predictions(X), self.n_classes_) / len(self.estimators_)

    def predict(self, X):
        return np.argmax(vote_counts(self.member_predictions(X), self.n_classes_), axis=1)

    def predict_proba(self, X):
        X = self._check_X(X)
        return np.mean([m.predict_proba(X) for m in self.estimators_], axis=0)

    def summary(self):
        s = {"kind": self.kind, "seed": self.seed,
             "members": [m.summary() for m in getattr(self, "estimators_", self.estimators)]}
        return s


class SoftVote(Classifier):
    """Weighted mean of member probabilities; prediction is its argmax."""

    kind = "soft_vote"
    _params = ("estimators", "weights", "seed", "n_jobs")

    def __init__(self, estimators, weights=None, seed=0, n_jobs=1):
        self.estimators = list(estimators)
        self.weights = list(weights) if weights is not None else [1.0] * len(self.estimators)
        if len(self.weights) != len(self.estimators) or any(w <= 0 for w in self.weights):
            raise ValueError("need one positive weight per member")
        self.seed = seed
        self.n_jobs = n_jobs

    fit = HardVote.fit

    def predict_proba(self, X):
        X = self._check_X(X)
        w = np.asarray(self.weights, dtype=np.float64)
        total = np.zeros((X.shape[0], self.n_classes_))
        for wi, m in zip(w, self.estimators_):
            total += wi * m.predict_proba(X)
        return total / w.sum()

    def summary(self):
        return {"kind": self.kind, "seed": self.seed, "weights": list(self.weights),
                "members": [m.summary() for m in getattr(self, "estimators_", self.estimators)]}


class Bagging(Classifier):
    """Copies of ``base`` on random row and column subsets, combined by majority vote.

    Bag ``b`` draws ``ceil(max_samples * n)`` rows (with replacement when
    ``bootstrap``) and ``ceil(max_features * d)`` distinct columns from the
    stream ``(seed, b)``; both index lists are kept sorted.  The copy is
    reseeded with ``derive_seed(seed, b)``.  ``predict_proba`` averages the
    copies' probabilities; ranking scores are vote fractions.
    """

    kind = "bagging"
    _params = ("base", "n_bags", "max_samples", "max_features", "bootstrap", "seed", "n_jobs")

    def __init__(self, base, n_bags=10, max_samples=0.5, max_features=0.5, bootstrap=True, seed=0, n_jobs=1):
        if not (0 < max_samples <= 1 and 0 < max_features <= 1):
            raise ValueError("max_samples and max_features must lie in (0, 1]")
        if n_bags < 1:
            raise ValueError("n_bags must be >= 1")
        self.base = base
        self.n_bags = n_bags
        self.max_samples = max_samples
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed
        self.n_jobs = n_jobs

    def draw(self, b: int, n: int, d: int):
        """Row and column indices used by bag ``b``."""
        m = math.ceil(self.max_samples * n)
        f = math.ceil(self.max_features * d)
        if m < 1 or f < 1:
            raise ValueError("bag would be empty")
        rng = make_rng(self.seed, b)
        rows = rng.integers(0, n, size=m) if self.bootstrap else rng.permutation(n)[:m]
        feats = rng.permutation(d)[:f]
        return np.sort(rows), np.sort(feats)

    def member_seed(self, b: int) -> int:
        return derive_seed(self.seed, b)

    def fit(self, X, y, n_classes=None):
        X, y = self._start_fit(X, y, n_classes)
        n, d = X.shape

        def fit_bag(b):
            rows, feats = self.draw(b, n, d)
            copy = reseed(self.base, self.member_seed(b))
            return copy.fit(X[np.ix_(rows, feats)], y[rows], self.n_classes_), feats

        fitted = _map(fit_bag, range(self.n_bags), self.n_jobs)
        self.estimators_ = [e for e, _ in fitted]
        self.feature_masks_ = [f for _, f in fitted]
        return self

    def member_predictions(self, X) -> np.ndarray:
        X = self._check_X(X)
        return np.vstack([e.predict(X[:, f]) for e, f in zip(self.estimators_, self.feature_masks_)])

    def roc_scores(self, X):
        return vote_counts(self.member_predictions(X), self.n_classes_) / self.n_bags

    def predict(self, X):
        return np.argmax(vote_counts(self.member_predictions(X), self.n_classes_), axis=1)

    def predict_proba(self, X):
        X = self._check_X(X)
        return np.mean([e.predict_proba(X[:, f]) for e, f in zip(self.estimators_, self.feature_masks_)], axis=0)

    def summary(self):
        s = {"kind": self.kind, "seed": self.seed, "n_bags": self.n_bags, "max_samples": self.max_samples,
             "max_features": self.max_features, "bootstrap": self.bootstrap, "base": self.base.summary()}
        if hasattr(self, "feature_masks_"):
            s["feature_masks"] = [f.tolist() for f in self.feature_masks_]
        return s


# --- the four composite models ---------------------------------------------

def _trio(rf_params=None, dt_params=None, lda_params=None):
    return [RandomForest(**(rf_params or {})), DecisionTree(**(dt_params or {})),
            LinearDiscriminant(**(lda_params or {}))]


def ensemble1(seed=0, n_jobs=1, **base_params) -> HardVote:
    """Hard vote over random forest, decision tree and LDA."""
    return HardVote(_trio(**base_params), seed=seed, n_jobs=n_jobs)


def ensemble2(seed=0, n_bags=10, max_samples=0.5, max_features=0.5, bootstrap=True,
              composition="bag_of_voters", n_jobs=1, **base_params) -> Classifier:
    """Bagging over the model-1 trio.

    ``bag_of_voters`` (default) bags the whole voting trio as one unit;
    ``vote_of_bags`` bags each member separately and hard-votes the three.
    """
    if composition == "bag_of_voters":
        lda_params = {"min_class_rows": 1, **(base_params.pop("lda_params", None) or {})}
        trio = HardVote(_trio(lda_params=lda_params, **base_params))
        return Bagging(trio, n_bags, max_samples, max_features, bootstrap, seed, n_jobs)
    if composition == "vote_of_bags":
        lda_params = {"min_class_rows": 1, **(base_params.pop("lda_params", None) or {})}
        bags = [Bagging(b, n_bags, max_samples, max_features, bootstrap)
                for b in _trio(lda_params=lda_params, **base_params)]
        return HardVote(bags, seed=seed, n_jobs=n_jobs)
    raise ValueError(f"unknown ensemble-2 composition {composition!r}")


def ensemble3(seed=0, weights=MODEL3_WEIGHTS, n_jobs=1, rf_params=None, knn_params=None,
              et_params=None) -> SoftVote:
    """Weighted soft vote: random forest (1), k-NN (2), extra trees (2)."""
    members = [RandomForest(**(rf_params or {})), KNearestNeighbors(**(knn_params or {})),
               ExtraTrees(**(et_params or {}))]
    return SoftVote(members, weights, seed=seed, n_jobs=n_jobs)


def ensemble4(seed=0, n_bags=10, max_samples=0.5, max_features=0.5, bootstrap=True, n_jobs=1,
              rf_params=None, dt_params=None, et_params=None) -> HardVote:
    """Bag each of random forest, decision tree and extra trees, then hard-vote the three."""
    bases = [RandomForest(**(rf_params or {})), DecisionTree(**(dt_params or {})),
             ExtraTrees(**(et_params or {}))]
    bags = [Bagging(b, n_bags, max_samples, max_features, bootstrap) for b in bases]
    return HardVote(bags, seed=seed, n_jobs=n_jobs)


ENSEMBLE_BUILDERS = {
    "model1_hard_vote": ensemble1,
    "model2_bagged": ensemble2,
    "model3_weighted_soft": ensemble3,
    "model4_bag_then_vote": ensemble4,
}


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ENSEMBLE_BUILDERS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}; expected one of {ENSEMBLE_KINDS}")
        weights = self.params.get("weights")
        if weights is not None and any(w <= 0 for w in weights):
            raise ValueError("ensemble weights must be positive")
        for key in ("max_samples", "max_features"):
            if key in self.params and not 0 < self.params[key] <= 1:
                raise ValueError(f"{key} must lie in (0, 1]")

    def build(self) -> Classifier:
        try:
            return ENSEMBLE_BUILDERS[self.kind](seed=self.seed, **self.params)
        except TypeError as exc:
            raise ValueError(f"bad parameters for {self.kind}: {exc}") from None


def ensemble1_fit(X, y, seed=0, n_classes=None, **params):
    return ensemble1(seed, **params).fit(X, y, n_classes)


def ensemble2_fit(X, y, seed=0, n_classes=None, **params):
    return ensemble2(seed, **params).fit(X, y, n_classes)


def ensemble3_fit(X, y, seed=0, n_classes=None, **params):
    return ensemble3(seed, **params).fit(X, y, n_classes)


def ensemble4_fit(X, y, seed=0, n_classes=None, **params):
    return ensemble4(seed, **params).fit(X, y, n_classes)


def bagging_fit(base: Classifier, X, y, n_bags=10, max_samples=0.5, max_features=0.5, seed=0,
                bootstrap=True, n_classes=None):
    return Bagging(base, n_bags, max_samples, max_features, bootstrap, seed).fit(X, y, n_classes)
