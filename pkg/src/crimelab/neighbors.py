"""Exact k-nearest-neighbour search with a deterministic tie rule.

Squared Euclidean distance is accumulated column by column, left to right, as
``sum_j (a_j - b_j) * (a_j - b_j)``.  Neighbours are ordered by (distance,
training-row index), so equidistant rows resolve to the lower index.

Two engines give identical answers: a blocked brute-force scan for small
training sets, and a KD-tree (scipy) that only proposes candidates.  Every
candidate inside the k-th distance ball (with a small safety margin) is
re-scored with the exact formula above before ranking, so the tree never
decides an ordering.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

BRUTE_FORCE_LIMIT = 2_000_000  # train rows x query rows handled by the scan
_BLOCK_CELLS = 4_000_000
_RADIUS_SLACK = 1e-7


def squared_distances(points: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Exact squared distances from one query row to each row of ``points``."""
    d2 = np.zeros(points.shape[0], dtype=np.float64)
    for j in range(points.shape[1]):
        diff = points[:, j] - query[j]
        d2 += diff * diff
    return d2


def _rank(cand: np.ndarray, d2: np.ndarray, k: int):
    order = np.lexsort((cand, d2))[:k]
    return d2[order], cand[order]


def _brute(train, query, k, self_index):
    m, n = query.shape[0], train.shape[0]
    out_d = np.empty((m, k))
    out_i = np.empty((m, k), dtype=np.int64)
    block = max(1, _BLOCK_CELLS // max(n, 1))
    for start in range(0, m, block):
        q = query[start:start + block]
        D = np.zeros((q.shape[0], n))
        for j in range(train.shape[1]):
            diff = q[:, j, None] - train[None, :, j]
            D += diff * diff
        if self_index is not None:
            rows = np.arange(q.shape[0])
            D[rows, self_index[start:start + block]] = np.inf
        kth = np.partition(D, k - 1, axis=1)[:, k - 1]
        for r in range(q.shape[0]):
            cand = np.flatnonzero(D[r] <= kth[r])
            out_d[start + r], out_i[start + r] = _rank(cand, D[r, cand], k)
    return out_d, out_i


def _tree(train, query, k, self_index, tree):
    m = query.shape[0]
    tree = tree if tree is not None else cKDTree(train)
    kq = k + (1 if self_index is not None else 0)
    dist, _ = tree.query(query, k=kq)
    dist = dist.reshape(m, kq)
    # With self excluded, the k-th neighbour is at most the (k+1)-th hit.
    radius = dist[:, -1] * (1 + _RADIUS_SLACK) + _RADIUS_SLACK * (1 + np.abs(query).max(axis=1))
    balls = tree.query_ball_point(query, radius)
    out_d = np.empty((m, k))
    out_i = np.empty((m, k), dtype=np.int64)
    for r in range(m):
        cand = np.asarray(balls[r], dtype=np.int64)
        if self_index is not None:
            cand = cand[cand != self_index[r]]
        d2 = squared_distances(train[cand], query[r])
        out_d[r], out_i[r] = _rank(cand, d2, k)
    return out_d, out_i


def kneighbors(train, query, k: int, exclude_self: bool = False, method: str = "auto", tree=None):
    """Return ``(squared_distances, indices)``, each of shape ``(len(query), k)``.

    With ``exclude_self`` the query must be the training set itself; row ``i``
    then never counts as its own neighbour (exact duplicates still do).
    """
    train = np.ascontiguousarray(train, dtype=np.float64)
    query = np.ascontiguousarray(query, dtype=np.float64)
    n = train.shape[0]
    available = n - 1 if exclude_self else n
    if k < 1 or k > available:
        raise ValueError(f"k={k} neighbours requested but only {available} candidates exist")
    if exclude_self and query.shape[0] != n:
        raise ValueError("exclude_self requires query to be the training matrix")
    self_index = np.arange(n) if exclude_self else None
    if query.shape[0] == 0:
        return np.empty((0, k)), np.empty((0, k), dtype=np.int64)
    if method == "auto":
        method = "brute" if n * query.shape[0] <= BRUTE_FORCE_LIMIT else "tree"
    if method == "brute":
        return _brute(train, query, k, self_index)
    if method == "tree":
        return _tree(train, query, k, self_index, tree)
    raise ValueError(f"unknown neighbour search method {method!r}")
