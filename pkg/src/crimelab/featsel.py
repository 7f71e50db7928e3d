"""Filter-style feature selection: ANOVA F ranking and a variance threshold."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from crimelab.errors import DataError

SELECTOR_KINDS = ("none", "anova_k_best", "variance_threshold")
# p * (1 - p) for p = 0.8, written out so configs echo it exactly
DEFAULT_VARIANCE_THRESHOLD = 0.16


@dataclass(frozen=True)
class FeatureSelectorSpec:
    kind: str = "none"
    k: int = 10
    threshold: float = DEFAULT_VARIANCE_THRESHOLD

    def __post_init__(self):
        if self.kind not in SELECTOR_KINDS:
            raise ValueError(f"unknown selector kind {self.kind!r}; expected one of {SELECTOR_KINDS}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def anova_f_scores(X, y) -> np.ndarray:
    """One-way ANOVA F statistic per column.

    ``F = (SS_between / (K - 1)) / (SS_within / (n - K))``.  A column with no
    spread at all scores 0; one that is constant inside every class but varies
    between them scores ``inf``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes, inverse, counts = np.unique(y, return_inverse=True, return_counts=True)
    K, n = classes.size, y.size
    if K < 2:
        raise ValueError("ANOVA needs at least two classes")
    if n <= K:
        raise ValueError("ANOVA needs more rows than classes")
    grand = X.mean(axis=0)
    sums = np.zeros((K, X.shape[1]))
    np.add.at(sums, inverse, X)
    means = sums / counts[:, None]
    ss_between = (counts[:, None] * (means - grand) ** 2).sum(axis=0)
    ss_within = ((X - means[inverse]) ** 2).sum(axis=0)
    ms_between = ss_between / (K - 1)
    ms_within = ss_within / (n - K)
    # Degenerate cases are decided by exact range checks, not by round-off.
    lo = np.full((K, X.shape[1]), np.inf)
    hi = np.full((K, X.shape[1]), -np.inf)
    np.minimum.at(lo, inverse, X)
    np.maximum.at(hi, inverse, X)
    constant = X.max(axis=0) == X.min(axis=0)
    pure = np.all(hi == lo, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = ms_between / ms_within
    f = np.where(constant, 0.0, np.where(pure, np.inf, f))
    return f


def select_k_best(X, y, k: int):
    """Indices of the ``k`` highest-F columns, in original order, plus the reduced matrix.

    Equal scores prefer the lower column index.
    """
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    if not 1 <= k <= d:
        raise ValueError(f"k={k} must lie in [1, {d}]")
    scores = anova_f_scores(X, y)
    order = np.lexsort((np.arange(d), -scores))
    chosen = np.sort(order[:k])
    return chosen, X[:, chosen]


def variance_threshold_filter(X, threshold: float = DEFAULT_VARIANCE_THRESHOLD):
    """Keep columns whose population variance is strictly above ``threshold``.

    Returns ``(kept_indices, dropped_indices, reduced_matrix)``.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    X = np.asarray(X, dtype=np.float64)
    var = X.var(axis=0)
    keep = np.flatnonzero(var > threshold)
    if keep.size == 0:
        raise DataError(f"variance threshold {threshold} removed every column")
    dropped = np.flatnonzero(~(var > threshold))
    return keep, dropped, X[:, keep]


def fit_selector(spec: FeatureSelectorSpec, X, y) -> np.ndarray:
    """Column indices chosen by ``spec`` on training data."""
    X = np.asarray(X, dtype=np.float64)
    if spec.kind == "none":
        return np.arange(X.shape[1])
    if spec.kind == "anova_k_best":
        return select_k_best(X, y, min(spec.k, X.shape[1]))[0]
    return variance_threshold_filter(X, spec.threshold)[0]
