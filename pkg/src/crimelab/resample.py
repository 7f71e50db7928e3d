"""Class-imbalance resamplers for training partitions.

Oversamplers keep every input row in its original position and append new
rows class by class (ascending class code, then generation order).
Undersamplers return the surviving rows in their original order.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from crimelab.neighbors import kneighbors
from crimelab.rng import make_rng

log = logging.getLogger(__name__)

SAMPLER_KINDS = ("none", "random_over", "random_under", "smote", "tomek_links", "smote_tomek")


@dataclass(frozen=True)
class SamplerSpec:
    kind: str = "none"
    smote_k: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}; expected one of {SAMPLER_KINDS}")
        if self.smote_k < 1:
            raise ValueError("smote_k must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SamplerSpec":
        return cls(**d)


@dataclass(frozen=True)
class SmoteProvenance:
    """How each synthetic row was made: ``X[base] + lam * (X[neighbor] - X[base])``.

    ``base`` and ``neighbor`` index the *input* matrix.  Duplicated rows (a
    singleton class) have ``neighbor == base`` and ``lam == 0``.
    """

    base: np.ndarray
    neighbor: np.ndarray
    lam: np.ndarray
    label: np.ndarray


def _check(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("cannot resample an empty training set")
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y lengths differ")
    return X, y


def _class_counts(y):
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise ValueError("resampling needs at least two classes")
    return classes, counts


def random_oversample(X, y, seed: int = 0):
    """Top up every class to the majority count by drawing its rows with replacement."""
    X, y = _check(X, y)
    classes, counts = _class_counts(y)
    target = counts.max()
    extra = []
    for c, n_c in zip(classes, counts):
        if n_c < target:
            members = np.flatnonzero(y == c)
            extra.append(members[make_rng(seed, int(c)).integers(0, n_c, size=target - n_c)])
    if not extra:
        return X.copy(), y.copy()
    idx = np.concatenate(extra)
    return np.vstack([X, X[idx]]), np.concatenate([y, y[idx]])


def random_undersample(X, y, seed: int = 0):
    """Cut every class down to the minority count, keeping a seeded subset."""
    X, y = _check(X, y)
    classes, counts = _class_counts(y)
    target = counts.min()
    keep = []
    for c, n_c in zip(classes, counts):
        members = np.flatnonzero(y == c)
        keep.append(members[make_rng(seed, int(c)).permutation(n_c)[:target]])
    idx = np.sort(np.concatenate(keep))
    return X[idx], y[idx]


def smote(X, y, k: int = 5, seed: int = 0, return_provenance: bool = False):
    """SMOTE oversampling up to the majority count.

    For each non-majority class ``c`` (own seed stream ``(seed, c)``), every
    synthetic row picks a base row of ``c`` uniformly, one of its ``k`` nearest
    same-class neighbours uniformly, and ``lam ~ U[0, 1)``.  A class with a
    single row is duplicated instead, with a warning.
    """
    X, y = _check(X, y)
    if k < 1:
        raise ValueError("k must be >= 1")
    classes, counts = _class_counts(y)
    target = counts.max()
    new_X, bases, nbrs, lams, labels = [], [], [], [], []
    for c, n_c in zip(classes, counts):
        need = int(target - n_c)
        if need == 0:
            continue
        members = np.flatnonzero(y == c)
        rng = make_rng(seed, int(c))
        if n_c == 1:
            warnings.warn(f"class {int(c)} has one row; SMOTE falls back to duplication", stacklevel=2)
            base = np.repeat(members, need)
            nb, lam = base.copy(), np.zeros(need)
        else:
            k_eff = min(k, n_c - 1)
            pick = rng.integers(0, n_c, size=need)
            slot = rng.integers(0, k_eff, size=need)
            lam = rng.random(need)
            Xc = X[members]
            used = np.unique(pick)
            nn = _neighbors_of(Xc, used, k_eff)
            lookup = np.full(n_c, -1, dtype=np.int64)
            lookup[used] = np.arange(used.size)
            local_nb = nn[lookup[pick], slot]
            base, nb = members[pick], members[local_nb]
        new_X.append(X[base] + lam[:, None] * (X[nb] - X[base]))
        bases.append(base)
        nbrs.append(nb)
        lams.append(lam)
        labels.append(np.full(need, c, dtype=np.int64))

    if new_X:
        X_out = np.vstack([X] + new_X)
        y_out = np.concatenate([y] + labels)
        prov = SmoteProvenance(np.concatenate(bases), np.concatenate(nbrs), np.concatenate(lams),
                               np.concatenate(labels))
    else:
        X_out, y_out = X.copy(), y.copy()
        empty = np.empty(0, dtype=np.int64)
        prov = SmoteProvenance(empty, empty, np.empty(0), empty)
    if return_provenance:
        return X_out, y_out, prov
    return X_out, y_out


def _neighbors_of(Xc, rows, k):
    """k nearest same-class neighbours for a subset of rows, self excluded."""
    _, nn = kneighbors(Xc, Xc[rows], k + 1)
    out = np.empty((rows.size, k), dtype=np.int64)
    for r, row in enumerate(rows):
        # Drop the row itself; if it is not among the k+1 (duplicates ranked first
        # by lower index) drop the last entry instead.
        hits = nn[r][nn[r] != row]
        out[r] = hits[:k]
    return out


def tomek_links(X, y, return_removed: bool = False):
    """Remove Tomek links in one pass.

    A link is a pair of rows with different labels that are each other's
    nearest neighbour (self excluded).  The endpoint whose class is larger in
    the input loses its row; when both classes are the same size, both go.
    """
    X, y = _check(X, y)
    classes, counts = _class_counts(y)
    size = dict(zip(classes.tolist(), counts.tolist()))
    _, nn = kneighbors(X, X, 1, exclude_self=True)
    nn = nn[:, 0]
    i = np.arange(y.size)
    linked = (nn[nn] == i) & (y != y[nn]) & (i < nn)
    remove = np.zeros(y.size, dtype=bool)
    for a in np.flatnonzero(linked):
        b = nn[a]
        sa, sb = size[int(y[a])], size[int(y[b])]
        if sa >= sb:
            remove[a] = True
        if sb >= sa:
            remove[b] = True
    keep = ~remove
    if return_removed:
        return X[keep], y[keep], np.flatnonzero(remove)
    return X[keep], y[keep]


def smote_tomek(X, y, k: int = 5, seed: int = 0):
    Xs, ys = smote(X, y, k, seed)
    return tomek_links(Xs, ys)


def resample(spec: SamplerSpec, X, y):
    """Apply the sampler described by ``spec``."""
    if spec.kind == "none":
        X, y = _check(X, y)
        return X, y
    if spec.kind == "random_over":
        return random_oversample(X, y, spec.seed)
    if spec.kind == "random_under":
        return random_undersample(X, y, spec.seed)
    if spec.kind == "smote":
        return smote(X, y, spec.smote_k, spec.seed)
    if spec.kind == "tomek_links":
        return tomek_links(X, y)
    return smote_tomek(X, y, spec.smote_k, spec.seed)
