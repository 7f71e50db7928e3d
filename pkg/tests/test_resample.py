from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from crimelab.neighbors import kneighbors
from crimelab.resample import (SamplerSpec, random_oversample, random_undersample, resample, smote,
                               smote_tomek, tomek_links)


def _counts(y, K=None):
    return np.bincount(y, minlength=K or 0).tolist()


def _rows(X):
    return {tuple(r) for r in np.asarray(X).tolist()}


def test_spec_validation_and_roundtrip():
    with pytest.raises(ValueError):
        SamplerSpec("adasyn")
    with pytest.raises(ValueError):
        SamplerSpec("smote", smote_k=0)
    s = SamplerSpec("smote", 3, 9)
    assert SamplerSpec.from_dict(s.to_dict()) == s


def test_none_is_identity():
    X = np.arange(6.0).reshape(3, 2)
    y = np.array([0, 1, 1])
    Xo, yo = resample(SamplerSpec("none"), X, y)
    np.testing.assert_array_equal(Xo, X)
    np.testing.assert_array_equal(yo, y)


def test_oversample_3_1():
    X = np.array([[0.0], [1.0], [2.0], [9.0]])
    y = np.array([0, 0, 0, 1])
    Xo, yo = random_oversample(X, y, seed=0)
    assert _counts(yo) == [3, 3]
    assert np.all(Xo[yo == 1] == 9.0)
    np.testing.assert_array_equal(Xo[:4], X)


def test_oversample_balanced_unchanged():
    X = np.arange(4.0)[:, None]
    y = np.array([0, 1, 0, 1])
    Xo, yo = random_oversample(X, y, 1)
    np.testing.assert_array_equal(Xo, X)
    np.testing.assert_array_equal(yo, y)


def test_oversample_fifteen_classes():
    rng = np.random.default_rng(0)
    y = np.repeat(np.arange(15), rng.integers(1, 40, size=15))
    X = rng.normal(size=(y.size, 3))
    _, yo = random_oversample(X, y, 2)
    assert set(_counts(yo)) == {max(_counts(y))}


def test_undersample_3_1_subset_property():
    X = np.array([[0.0], [1.0], [2.0], [9.0]])
    y = np.array([0, 0, 0, 1])
    Xo, yo = random_undersample(X, y, seed=5)
    assert _counts(yo) == [1, 1]
    assert _rows(Xo) <= _rows(X)


def test_undersample_balanced_counts_unchanged():
    y = np.array([0, 1, 2] * 4)
    _, yo = random_undersample(np.zeros((12, 1)), y, 0)
    assert _counts(yo) == [4, 4, 4]


def test_empty_and_single_class_rejected():
    with pytest.raises(ValueError):
        random_oversample(np.zeros((0, 2)), np.zeros(0, dtype=int))
    with pytest.raises(ValueError):
        random_undersample(np.zeros((3, 1)), np.zeros(3, dtype=int))


def test_smote_segment_geometry():
    X = np.array([[5.0, 5.0]] * 6 + [[0.0, 0.0], [1.0, 1.0]])
    X[:6] += np.arange(6)[:, None]
    y = np.array([0] * 6 + [1, 1])
    Xo, yo, prov = smote(X, y, k=1, seed=3, return_provenance=True)
    syn = Xo[8:]
    assert _counts(yo) == [6, 6]
    assert np.all(syn[:, 0] == syn[:, 1])
    assert np.all((syn >= 0) & (syn <= 1))


def test_smote_lambda_zero_is_base():
    X = np.array([[0.0, 0.0], [2.0, 4.0], [5.0, 5.0], [6.0, 6.0], [7.0, 7.0], [8.0, 8.0]])
    y = np.array([1, 1, 0, 0, 0, 0])
    Xo, _, prov = smote(X, y, k=1, seed=0, return_provenance=True)
    lam = np.zeros_like(prov.lam)
    rebuilt = X[prov.base] + lam[:, None] * (X[prov.neighbor] - X[prov.base])
    np.testing.assert_array_equal(rebuilt, X[prov.base])


def _in_hull(points, p):
    m = points.shape[0]
    A_eq = np.vstack([points.T, np.ones(m)])
    b_eq = np.r_[p, 1.0]
    res = linprog(np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * m, method="highs")
    return res.status == 0


def test_smote_rows_replay_and_stay_in_class_hull():
    rng = np.random.default_rng(11)
    y = np.repeat([0, 1, 2], [60, 15, 8])
    X = np.array([[0, 0], [4, 0], [0, 4]], dtype=float)[y] + rng.normal(size=(y.size, 2))
    Xo, yo, prov = smote(X, y, k=5, seed=4, return_provenance=True)
    n = y.size
    syn = Xo[n:]
    np.testing.assert_array_equal(syn, X[prov.base] + prov.lam[:, None] * (X[prov.neighbor] - X[prov.base]))
    assert np.all((prov.lam >= 0) & (prov.lam <= 1))
    for c in (1, 2):
        members = np.flatnonzero(y == c)
        _, nn = kneighbors(X[members], X[members], min(5, members.size - 1), exclude_self=True)
        local = {int(m): i for i, m in enumerate(members)}
        for b, nb in zip(prov.base[prov.label == c], prov.neighbor[prov.label == c]):
            assert int(nb) in members[nn[local[int(b)]]]
        for s in syn[yo[n:] == c][:10]:
            assert _in_hull(X[members], s)


def test_smote_singleton_class_duplicates_with_warning():
    X = np.array([[0.0], [1.0], [2.0], [7.0]])
    y = np.array([0, 0, 0, 1])
    with pytest.warns(UserWarning, match="one row"):
        Xo, yo = smote(X, y, k=5, seed=0)
    assert _counts(yo) == [3, 3] and np.all(Xo[yo == 1] == 7.0)


def test_smote_deterministic():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 3))
    y = (np.arange(50) < 8).astype(int)
    a = smote(X, y, 5, 9)
    b = smote(X, y, 5, 9)
    np.testing.assert_array_equal(a[0], b[0])


def test_tomek_example():
    X = np.array([[0.0], [10.0], [0.1]])
    y = np.array([0, 0, 1])
    Xo, yo, removed = tomek_links(X, y, return_removed=True)
    assert removed.tolist() == [0]
    assert Xo[:, 0].tolist() == [10.0, 0.1]


def test_tomek_equal_classes_removes_both():
    X = np.array([[0.0], [0.1], [10.0], [20.0]])
    y = np.array([0, 1, 0, 1])
    _, _, removed = tomek_links(X, y, return_removed=True)
    assert removed.tolist() == [0, 1]


def test_tomek_separated_classes_untouched():
    X = np.array([[0.0], [0.5], [10.0], [10.5]])
    y = np.array([0, 0, 1, 1])
    Xo, yo = tomek_links(X, y)
    np.testing.assert_array_equal(Xo, X)


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_tomek_never_removes_smallest_class_when_sizes_differ(seed):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1, 2], [20, 9, 4])
    X = rng.normal(size=(y.size, 2))
    _, yo, removed = tomek_links(X, y, return_removed=True)
    assert not np.any(y[removed] == 2)
    assert _counts(yo, 3)[2] == 4


def test_smote_tomek_composition():
    rng = np.random.default_rng(1)
    X = np.vstack([rng.normal(0, 1, (30, 2)), rng.normal(1, 1, (6, 2))])
    y = np.r_[np.zeros(30, int), np.ones(6, int)]
    Xs, ys = smote(X, y, 5, 2)
    Xt, yt = smote_tomek(X, y, 5, 2)
    np.testing.assert_array_equal((Xt, yt)[0], tomek_links(Xs, ys)[0])
    assert all(c <= 30 for c in _counts(yt))


def test_smote_tomek_identity_when_no_links():
    X = np.array([[0.0], [0.2], [0.4], [50.0], [50.3]])
    y = np.array([0, 0, 0, 1, 1])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        a = smote(X, y, 1, 0)
        b = smote_tomek(X, y, 1, 0)
    np.testing.assert_array_equal(a[0], b[0])


@pytest.mark.parametrize("kind", ["random_over", "smote"])
def test_oversamplers_keep_every_original_row(kind):
    rng = np.random.default_rng(3)
    y = np.repeat([0, 1, 2], [25, 7, 3])
    X = rng.normal(size=(y.size, 2))
    Xo, yo = resample(SamplerSpec(kind, seed=1), X, y)
    np.testing.assert_array_equal(Xo[:y.size], X)
    assert set(_counts(yo)) == {25}
