"""Shuffling, min-max scaling and stratified split/fold planning."""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from crimelab.errors import DataError, SchemaError
from crimelab.rng import make_rng
from crimelab.table import FeatureTable

log = logging.getLogger(__name__)

DEFAULT_TEST_FRACTION = 0.34


def shuffle_rows(table: FeatureTable, seed: int) -> FeatureTable:
    """Return the table with rows in a seeded Fisher-Yates order."""
    return table.take(make_rng(seed).permutation(table.n_rows))


@dataclass(frozen=True)
class NormalizationParams:
    columns: tuple[str, ...]
    mins: np.ndarray
    maxs: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        """Columns whose training range is a single value."""
        return self.maxs == self.mins

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "min": self.mins.tolist(), "max": self.maxs.tolist(),
                "degenerate": [c for c, d in zip(self.columns, self.degenerate) if d]}


def _as_matrix(data):
    if isinstance(data, FeatureTable):
        return data.matrix, tuple(data.feature_names)
    m = np.asarray(data, dtype=np.float64)
    if m.ndim != 2:
        raise SchemaError("expected a 2-D matrix")
    return m, tuple(f"x{j}" for j in range(m.shape[1]))


def fit_minmax(train) -> NormalizationParams:
    X, names = _as_matrix(train)
    if X.shape[0] == 0:
        raise DataError("cannot fit min-max parameters on an empty table")
    return NormalizationParams(names, X.min(axis=0), X.max(axis=0))


def apply_minmax(data, params: NormalizationParams, clip: bool = False):
    """Scale every column to ``(v - min) / (max - min)``.

    Constant training columns map to 0.  Rows outside the training range land
    outside [0, 1] unless ``clip`` is set.  Returns the same type it was given.
    """
    X, names = _as_matrix(data)
    if X.shape[1] != len(params.columns) or (isinstance(data, FeatureTable) and names != params.columns):
        raise SchemaError(f"columns {names} do not match normalization columns {params.columns}")
    span = params.maxs - params.mins
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (X - params.mins) / safe, 0.0)
    if clip:
        out = np.clip(out, 0.0, 1.0)
    if isinstance(data, FeatureTable):
        return data.with_matrix(out)
    return out


@dataclass(frozen=True)
class SplitPlan:
    train_indices: np.ndarray
    test_indices: np.ndarray
    test_fraction: float
    seed: int

    def to_json(self) -> str:
        return json.dumps({"train_indices": self.train_indices.tolist(),
                           "test_indices": self.test_indices.tolist(),
                           "test_fraction": self.test_fraction, "seed": self.seed}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SplitPlan":
        d = json.loads(text)
        return cls(np.asarray(d["train_indices"], dtype=np.int64), np.asarray(d["test_indices"], dtype=np.int64),
                   float(d["test_fraction"]), int(d["seed"]))


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: np.ndarray
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    def folds(self):
        for f in range(self.k):
            yield f, self.train_indices(f), self.test_indices(f)

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "assignment": self.assignment.tolist(), "seed": self.seed}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FoldPlan":
        d = json.loads(text)
        return cls(int(d["k"]), np.asarray(d["assignment"], dtype=np.int64), int(d["seed"]))


def _labels(data) -> np.ndarray:
    return data.labels if isinstance(data, FeatureTable) else np.asarray(data, dtype=np.int64)


def stratified_holdout_split(data, test_fraction: float = DEFAULT_TEST_FRACTION, seed: int = 0) -> SplitPlan:
    """Per-class proportional holdout.

    The test set holds ``round(test_fraction * n)`` rows.  Each class first gets
    ``floor(test_fraction * n_c)`` test rows; the leftover slots go to the
    classes with the largest fractional parts, ties ordered by a seeded draw.
    Singleton classes stay entirely in training.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    y = _labels(data)
    n = y.size
    rng = make_rng(seed, 0)
    classes, counts = np.unique(y, return_counts=True)
    exact = test_fraction * counts
    quota = np.floor(exact).astype(np.int64)
    frac = exact - quota
    capacity = counts - 1  # every class keeps at least one training row
    quota = np.minimum(quota, capacity)
    if np.any(counts < 2):
        warnings.warn(f"classes {classes[counts < 2].tolist()} have a single row; kept in training", stacklevel=2)
    remaining = int(round(test_fraction * n)) - int(quota.sum())
    tiebreak = rng.permutation(classes.size)
    order = sorted(range(classes.size), key=lambda i: (-frac[i], tiebreak[i]))
    for i in order:
        if remaining <= 0:
            break
        if quota[i] < capacity[i] and frac[i] > 0:
            quota[i] += 1
            remaining -= 1

    test = []
    for c, q in zip(classes, quota):
        members = np.flatnonzero(y == c)
        perm = make_rng(seed, 1, int(c)).permutation(members.size)
        test.append(members[perm[:q]])
    test_idx = np.sort(np.concatenate(test)) if test else np.empty(0, dtype=np.int64)
    mask = np.ones(n, dtype=bool)
    mask[test_idx] = False
    return SplitPlan(np.flatnonzero(mask), test_idx, float(test_fraction), int(seed))


def stratified_kfold_plan(labels, k: int = 10, seed: int = 0) -> FoldPlan:
    """Class-wise round-robin fold assignment after a seeded in-class shuffle.

    The round-robin cursor carries over from one class to the next, so fold
    sizes differ by at most one overall as well as within every class.
    """
    y = _labels(labels)
    n = y.size
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of rows ({n})")
    classes, counts = np.unique(y, return_counts=True)
    if np.any(counts < k):
        warnings.warn(f"classes {classes[counts < k].tolist()} have fewer than k={k} rows; "
                      "some folds will lack them", stacklevel=2)
    assignment = np.empty(n, dtype=np.int64)
    cursor = 0
    for c in classes:
        members = np.flatnonzero(y == c)
        members = members[make_rng(seed, 2, int(c)).permutation(members.size)]
        assignment[members] = (cursor + np.arange(members.size)) % k
        cursor = (cursor + members.size) % k
    return FoldPlan(int(k), assignment, int(seed))


def stratified_subsample(data, size: int, seed: int = 0) -> np.ndarray:
    """Indices of a stratified subsample of ``size`` rows (sorted)."""
    y = _labels(data)
    if size >= y.size:
        return np.arange(y.size)
    plan = stratified_holdout_split(y, size / y.size, seed)
    return plan.test_indices
