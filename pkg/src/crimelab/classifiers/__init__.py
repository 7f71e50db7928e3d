"""From-scratch classifiers sharing the :class:`Classifier` contract."""

from __future__ import annotations

from dataclasses import dataclass, field

from crimelab.classifiers.adaboost import AdaBoost
from crimelab.classifiers.base import Classifier
from crimelab.classifiers.forest import ExtraTrees, RandomForest
from crimelab.classifiers.knn import KNearestNeighbors
from crimelab.classifiers.lda import LinearDiscriminant
from crimelab.classifiers.tree import DecisionTree

MODEL_CLASSES = {
    "decision_tree": DecisionTree,
    "random_forest": RandomForest,
    "extra_trees": ExtraTrees,
    "knn": KNearestNeighbors,
    "lda": LinearDiscriminant,
    "adaboost": AdaBoost,
}

_SEEDED = {"decision_tree", "random_forest", "extra_trees", "adaboost"}


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_CLASSES:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {sorted(MODEL_CLASSES)}")

    def build(self) -> Classifier:
        params = dict(self.params)
        if self.kind in _SEEDED:
            params.setdefault("seed", self.seed)
        try:
            return MODEL_CLASSES[self.kind](**params)
        except TypeError as exc:
            raise ValueError(f"bad parameters for {self.kind}: {exc}") from None


def train_decision_tree(X, y, n_classes=None, **params):
    return DecisionTree(**params).fit(X, y, n_classes)


def train_random_forest(X, y, n_classes=None, **params):
    return RandomForest(**params).fit(X, y, n_classes)


def train_extra_trees(X, y, n_classes=None, **params):
    return ExtraTrees(**params).fit(X, y, n_classes)


def train_knn(X, y, n_classes=None, **params):
    return KNearestNeighbors(**params).fit(X, y, n_classes)


def train_lda(X, y, n_classes=None, **params):
    return LinearDiscriminant(**params).fit(X, y, n_classes)


def train_adaboost(X, y, n_classes=None, **params):
    return AdaBoost(**params).fit(X, y, n_classes)


__all__ = [
    "AdaBoost", "Classifier", "DecisionTree", "ExtraTrees", "KNearestNeighbors", "LinearDiscriminant",
    "MODEL_CLASSES", "ModelSpec", "RandomForest", "train_adaboost", "train_decision_tree",
    "train_extra_trees", "train_knn", "train_lda", "train_random_forest",
]
