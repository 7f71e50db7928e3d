from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import knn_oracle, root_split_oracle
from crimelab.classifiers import (MODEL_CLASSES, AdaBoost, DecisionTree, ExtraTrees, KNearestNeighbors,
                                  LinearDiscriminant, ModelSpec, RandomForest)
from crimelab.classifiers.base import vote_counts
from crimelab.classifiers.tree import entropy, gini
from crimelab.errors import DataError, SchemaError
from crimelab.models import build_model, load_model, save_model

SMALL = {
    "decision_tree": {},
    "random_forest": {"n_trees": 10},
    "extra_trees": {"n_trees": 10},
    "knn": {},
    "lda": {},
    "adaboost": {"n_estimators": 10},
}


# --- impurity -------------------------------------------------------------

def test_impurity_values():
    assert gini([5, 5]) == pytest.approx(0.5)
    assert entropy([5, 5]) == pytest.approx(1.0)
    assert gini([4, 0]) == 0.0 and entropy([4, 0]) == 0.0


@given(st.lists(st.integers(0, 50), min_size=2, max_size=6).filter(lambda c: sum(c) > 0))
def test_impurity_nonnegative_zero_iff_pure(counts):
    pure = sum(1 for c in counts if c) == 1
    for fn in (gini, entropy):
        v = float(fn(counts))
        assert v >= 0.0
        assert (v == 0.0) == pure


# --- decision tree ---------------------------------------------------------

def test_pure_data_single_leaf():
    m = DecisionTree().fit(np.random.default_rng(0).normal(size=(20, 3)), np.full(20, 2), n_classes=4)
    assert m.tree_.node_count == 1
    assert set(m.predict(np.zeros((5, 3)))) == {2}


def test_separable_1d_root_at_midpoint():
    x = np.r_[np.linspace(-5, -1, 10), np.linspace(1, 5, 10)][:, None]
    y = (x[:, 0] > 0).astype(int)
    m = DecisionTree().fit(x, y)
    assert m.tree_.feature[0] == 0
    assert m.tree_.threshold[0] == 0.0
    assert np.all(m.predict(x) == y)


@pytest.mark.parametrize("seed", range(5))
def test_root_split_matches_exhaustive_oracle(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 6, size=(40, 3)).astype(float)
    y = rng.integers(0, 2, size=40)
    m = DecisionTree(min_samples_leaf=7).fit(X, y)
    oracle = root_split_oracle(X, y, 7)
    if oracle is None or oracle[2] <= 1e-12:
        assert m.tree_.node_count == 1
    else:
        assert (m.tree_.feature[0], m.tree_.threshold[0]) == oracle[:2]


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_no_leaf_smaller_than_min_samples_leaf(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(80, 3))
    y = rng.integers(0, 3, size=80)
    tree = DecisionTree(min_samples_leaf=7).fit(X, y).tree_
    assert tree.n_samples[tree.is_leaf].min() >= 7 or tree.node_count == 1


def test_max_leaf_nodes_caps_leaves(blobs3):
    X, y = blobs3
    m = DecisionTree(min_samples_leaf=1, max_leaf_nodes=3).fit(X, y)
    assert m.tree_.n_leaves <= 3


def test_empty_fit_rejected():
    for cls in MODEL_CLASSES.values():
        with pytest.raises(DataError):
            cls().fit(np.zeros((0, 2)), np.zeros(0, dtype=int))


# --- forests ---------------------------------------------------------------

def test_forest_single_tree_reduction(blobs3):
    X, y = blobs3
    rf = RandomForest(n_trees=1, bootstrap=False, max_features=None, seed=3).fit(X, y)
    dt = DecisionTree(min_samples_leaf=1, max_depth=7).fit(X, y)
    np.testing.assert_array_equal(rf.predict_proba(X), dt.predict_proba(X))


@pytest.mark.parametrize("cls", [RandomForest, ExtraTrees])
def test_forest_depth_bound(cls):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(300, 6))
    y = rng.integers(0, 5, size=300)
    m = cls(n_trees=15, seed=2).fit(X, y)
    assert max(t.max_depth for t in m.trees_) <= 7


def test_forest_oob_on_separable_blobs():
    rng = np.random.default_rng(0)
    y = np.repeat([0, 1, 2], 100)
    X = np.array([[0, 0], [6, 0], [0, 6]], dtype=float)[y] + rng.normal(0, 0.5, size=(300, 2))
    m = RandomForest(n_trees=50, oob_score=True, seed=4).fit(X, y)
    assert m.oob_score_ > 0.95


def test_extra_trees_pure_single_leaf():
    m = ExtraTrees(n_trees=3).fit(np.random.default_rng(0).normal(size=(10, 2)), np.zeros(10, dtype=int))
    assert all(t.node_count == 1 for t in m.trees_)


def test_forest_thread_independent(blobs3):
    X, y = blobs3
    a = RandomForest(n_trees=12, seed=5, n_jobs=1).fit(X, y).predict_proba(X)
    b = RandomForest(n_trees=12, seed=5, n_jobs=4).fit(X, y).predict_proba(X)
    np.testing.assert_array_equal(a, b)


# --- knn ---------------------------------------------------------------------

def test_knn_k1_memorizes(blobs3):
    X, y = blobs3
    assert np.all(KNearestNeighbors(k=1).fit(X, y).predict(X) == y)


def test_knn_majority_of_equidistant():
    X = np.array([[1.0, 0], [-1.0, 0], [0, 1.0], [0, -1.0], [0.6, 0.8]])
    y = np.array([1, 1, 0, 0, 0])
    assert KNearestNeighbors(k=5).fit(X, y).predict(np.zeros((1, 2)))[0] == 0


def test_knn_distance_tie_prefers_lower_index():
    X = np.array([[1.0], [-1.0], [5.0]])
    y = np.array([1, 0, 0])
    assert KNearestNeighbors(k=1).fit(X, y).predict([[0.0]])[0] == 1


def test_knn_vote_tie_lowest_code():
    X = np.array([[1.0], [2.0], [10.0], [11.0]])
    y = np.array([2, 1, 0, 0])
    assert KNearestNeighbors(k=2).fit(X, y).predict([[1.4]])[0] == 1


@pytest.mark.parametrize("method", ["brute", "tree"])
def test_knn_matches_bruteforce_oracle(method):
    rng = np.random.default_rng(12)
    X = rng.integers(0, 4, size=(200, 5)).astype(float)
    y = rng.integers(0, 4, size=200)
    Q = rng.integers(0, 4, size=(60, 5)).astype(float)
    pred = KNearestNeighbors(k=5, method=method).fit(X, y, 4).predict(Q)
    np.testing.assert_array_equal(pred, knn_oracle(X, y, Q, 5, 4))


def test_knn_k_too_large():
    with pytest.raises(DataError):
        KNearestNeighbors(k=5).fit(np.zeros((3, 1)), np.array([0, 1, 0]))


# --- lda ---------------------------------------------------------------------

def test_lda_perpendicular_bisector():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal([-2, 0], 1, (200, 2)), rng.normal([2, 0], 1, (200, 2))])
    y = np.repeat([0, 1], 200)
    m = LinearDiscriminant().fit(X, y)
    mid = (X[y == 0].mean(0) + X[y == 1].mean(0)) / 2
    direction = X[y == 1].mean(0) - X[y == 0].mean(0)
    assert m.predict([mid - 0.2 * direction])[0] == 0
    assert m.predict([mid + 0.2 * direction])[0] == 1


def test_lda_duplicate_column_same_predictions():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(100, 3))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(int)
    a = LinearDiscriminant().fit(X, y)
    Xd = np.column_stack([X, X[:, 0]])
    b = LinearDiscriminant().fit(Xd, y)
    assert b.rank_ == 3
    np.testing.assert_array_equal(a.predict(X), b.predict(Xd))


def test_lda_coefficient_sign():
    x = np.r_[np.linspace(0, 1, 20), np.linspace(2, 3, 20)][:, None]
    y = np.repeat([0, 1], 20)
    m = LinearDiscriminant().fit(x, y)
    coef = m.coef_
    assert coef[1, 0] - coef[0, 0] > 0


def test_lda_singleton_class_rejected():
    with pytest.raises(DataError):
        LinearDiscriminant().fit(np.arange(5.0)[:, None], np.array([0, 0, 0, 0, 1]))


@given(st.floats(0.01, 100))
@settings(max_examples=30, deadline=None)
def test_lda_positive_scaling_invariance(c):
    rng = np.random.default_rng(4)
    X = rng.normal(size=(90, 3)) + np.repeat(np.eye(3) * 2, 30, axis=0)
    y = np.repeat([0, 1, 2], 30)
    Q = rng.normal(size=(50, 3))
    a = LinearDiscriminant().fit(X, y).predict(Q)
    b = LinearDiscriminant().fit(X * c, y).predict(Q * c)
    np.testing.assert_array_equal(a, b)


# --- adaboost ----------------------------------------------------------------

def test_adaboost_perfect_stump_stops():
    x = np.arange(10.0)[:, None]
    y = (x[:, 0] > 4).astype(int)
    m = AdaBoost().fit(x, y)
    assert len(m.estimators_) == 1 and m.stop_reason_ == "perfect_fit"
    assert np.all(m.predict(x) == y)


def test_adaboost_two_class_alpha_is_classic():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(120, 2))
    y = (X[:, 0] + 0.3 * rng.normal(size=120) > 0).astype(int)
    m = AdaBoost(n_estimators=5).fit(X, y)
    err = m.errors_[0]
    assert m.alphas_[0] == pytest.approx(math.log((1 - err) / err))


def test_adaboost_training_error_trend_on_moons():
    rng = np.random.default_rng(8)
    t = rng.uniform(0, math.pi, 200)
    X = np.vstack([np.c_[np.cos(t[:100]), np.sin(t[:100])],
                   np.c_[1 - np.cos(t[100:]), 0.5 - np.sin(t[100:])]]) + rng.normal(0, 0.1, (200, 2))
    y = np.repeat([0, 1], 100)
    m = AdaBoost(n_estimators=10).fit(X, y)
    errs = [np.mean(p != y) for p in m.staged_predict(X)]
    assert errs[-1] <= errs[0]
    assert all(a > 0 for a in m.alphas_)


def test_adaboost_alphas_positive_multiclass(blobs3):
    X, y = blobs3
    m = AdaBoost(n_estimators=20).fit(X, y)
    assert np.all(m.alphas_ > 0)
    assert m.predict(X).mean() >= 0  # predicts valid codes
    assert set(np.unique(m.predict(X))) <= {0, 1, 2}


# --- shared contract ---------------------------------------------------------

@pytest.mark.parametrize("kind", sorted(MODEL_CLASSES))
def test_contract_argmax_proba_equals_predict(kind, blobs3):
    X, y = blobs3
    m = ModelSpec(kind, SMALL[kind], seed=1).build().fit(X, y, n_classes=4)
    Q = np.random.default_rng(0).uniform(-3, 6, size=(1000, 2))
    proba = m.predict_proba(Q)
    assert proba.shape == (1000, 4)
    assert np.all(proba >= 0)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_array_equal(np.argmax(proba, axis=1), m.predict(Q))
    with pytest.raises(SchemaError):
        m.predict(np.zeros((2, 3)))


@pytest.mark.parametrize("kind", sorted(MODEL_CLASSES))
def test_contract_majority_only_constant(kind):
    X = np.random.default_rng(0).normal(size=(30, 2))
    y = np.full(30, 1)
    if kind == "lda":
        m = ModelSpec(kind).build().fit(X, y, n_classes=3)
    else:
        m = ModelSpec(kind, SMALL[kind]).build().fit(X, y, n_classes=3)
    assert set(m.predict(np.random.default_rng(1).normal(size=(50, 2)))) == {1}


@pytest.mark.parametrize("kind", sorted(MODEL_CLASSES))
def test_contract_deterministic_and_serializable(kind, blobs3, tmp_path):
    X, y = blobs3
    a = ModelSpec(kind, SMALL[kind], seed=9).build().fit(X, y)
    b = ModelSpec(kind, SMALL[kind], seed=9).build().fit(X, y)
    np.testing.assert_array_equal(a.predict_proba(X), b.predict_proba(X))
    save_model(a, tmp_path / "m.bin")
    np.testing.assert_array_equal(load_model(tmp_path / "m.bin").predict_proba(X), a.predict_proba(X))
    assert (tmp_path / "m.bin.json").exists()


def test_model_spec_errors():
    with pytest.raises(ValueError):
        ModelSpec("svm")
    with pytest.raises(ValueError):
        ModelSpec("knn", {"neighbours": 3}).build()
    with pytest.raises(Exception):
        build_model("svm")


def test_vote_counts():
    t = vote_counts(np.array([[0, 1], [0, 2], [1, 2]]), 3)
    assert t.tolist() == [[2, 1, 0], [0, 1, 2]]
