"""Binary CART trees on numeric features (entropy or Gini splits)."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from crimelab.classifiers.base import Classifier
from crimelab.rng import make_rng

# Gains within this distance of the best count as tied; ties go to the lower
# feature index, then the lower threshold.
TIE_TOL = 1e-12
# A split must improve impurity by more than this to be accepted.
MIN_GAIN = 1e-12


def entropy(counts) -> np.ndarray:
    """Shannon entropy (bits) of each row of a class-count array."""
    c = np.asarray(counts, dtype=np.float64)
    total = c.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, c / total, 0.0)
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return np.maximum(-terms.sum(axis=-1), 0.0)


def gini(counts) -> np.ndarray:
    c = np.asarray(counts, dtype=np.float64)
    total = c.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, c / total, 0.0)
    return np.maximum(1.0 - (p * p).sum(axis=-1), 0.0)


CRITERIA = {"entropy": entropy, "gini": gini}


@dataclass
class Split:
    feature: int
    threshold: float
    gain: float


def _best_threshold_split(x, y, w, n_classes, impurity, parent, min_leaf):
    """Best midpoint split on one column; returns ``(gains, thresholds)`` of valid cuts."""
    m = x.size
    order = np.argsort(x, kind="stable")
    xs = x[order]
    onehot = np.zeros((m, n_classes))
    onehot[np.arange(m), y[order]] = w[order]
    left = np.cumsum(onehot, axis=0)[:-1]
    n_left = np.arange(1, m)
    valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (m - n_left >= min_leaf)
    if not valid.any():
        return None, None
    left = left[valid]
    total = onehot.sum(axis=0)
    right = total - left
    w_left = left.sum(axis=1)
    w_right = right.sum(axis=1)
    w_all = w_left + w_right
    child = (w_left * impurity(left) + w_right * impurity(right)) / w_all
    lo, hi = xs[:-1][valid], xs[1:][valid]
    thr = (lo + hi) / 2.0
    thr = np.where((thr >= hi) | (thr < lo), lo, thr)
    return parent - child, thr


def _random_threshold_split(x, y, w, n_classes, impurity, parent, min_leaf, rng):
    lo, hi = x.min(), x.max()
    thr = rng.uniform(lo, hi)
    go_left = x <= thr
    n_left = int(go_left.sum())
    if n_left < min_leaf or x.size - n_left < min_leaf:
        return None, None
    left = np.bincount(y[go_left], weights=w[go_left], minlength=n_classes)
    right = np.bincount(y[~go_left], weights=w[~go_left], minlength=n_classes)
    wl, wr = left.sum(), right.sum()
    child = (wl * impurity(left) + wr * impurity(right)) / (wl + wr)
    return np.array([parent - child]), np.array([thr])


def choose_split(candidates) -> Split | None:
    """Apply the tie rule to ``[(feature, gains, thresholds), ...]``.

    Thresholds within one feature must be in ascending order.
    """
    if not candidates:
        return None
    best = max(float(g.max()) for _, g, _ in candidates)
    for f, g, t in sorted(candidates, key=lambda c: c[0]):
        hits = np.flatnonzero(g >= best - TIE_TOL)
        if hits.size:
            i = hits[0]
            return Split(int(f), float(t[i]), float(g[i]))
    return None


class Tree:
    """Array-backed fitted tree.  ``feature == -1`` marks a leaf."""

    def __init__(self, n_classes):
        self.n_classes = n_classes
        self.feature: list = []
        self.threshold: list = []
        self.left: list = []
        self.right: list = []
        self.value: list = []
        self.n_samples: list = []
        self.depth: list = []

    def add(self, value, n_samples, depth) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        self.n_samples.append(n_samples)
        self.depth.append(depth)
        return len(self.feature) - 1

    def finalize(self):
        self.feature = np.asarray(self.feature, dtype=np.int64)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        self.value = np.asarray(self.value, dtype=np.float64).reshape(-1, self.n_classes)
        self.n_samples = np.asarray(self.n_samples, dtype=np.int64)
        self.depth = np.asarray(self.depth, dtype=np.int64)
        return self

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    @property
    def n_leaves(self) -> int:
        return int(self.is_leaf.sum())

    def apply(self, X) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        for _ in range(self.max_depth):
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            go_left = X[rows, np.maximum(feat, 0)] <= self.threshold[node]
            node = np.where(active, np.where(go_left, self.left[node], self.right[node]), node)
        return node

    def predict_proba(self, X) -> np.ndarray:
        return self.value[self.apply(X)]


def grow_tree(X, y, n_classes, *, criterion="entropy", max_depth=None, min_samples_leaf=1,
              min_samples_split=2, max_features=None, splitter="best", sample_weight=None,
              max_leaf_nodes=None, rng=None) -> Tree:
    """Grow a tree on ``(X, y)``.

    ``max_features=None`` scans every column in index order.  Otherwise columns
    are visited in a random order until ``max_features`` non-constant ones have
    been evaluated.  ``splitter="random"`` draws one uniform threshold per
    evaluated column (extremely randomized trees).  With ``max_leaf_nodes`` the
    tree grows best-first by weighted impurity decrease.
    """
    impurity = CRITERIA[criterion]
    n, d = X.shape
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    w_root = w.sum()
    max_depth = np.inf if max_depth is None else max_depth
    min_split = max(min_samples_split, 2 * min_samples_leaf)
    if rng is None and (max_features is not None or splitter == "random"):
        rng = make_rng(0)
    tree = Tree(n_classes)

    def make_node(idx, depth):
        counts = np.bincount(y[idx], weights=w[idx], minlength=n_classes)
        total = counts.sum()
        value = counts / total if total > 0 else np.full(n_classes, 1.0 / n_classes)
        node = tree.add(value, idx.size, depth)
        if depth >= max_depth or idx.size < min_split or np.count_nonzero(counts) <= 1:
            return node, None
        parent = float(impurity(counts))
        Xn, yn, wn = X[idx], y[idx], w[idx]
        order = range(d) if max_features is None else rng.permutation(d)
        budget = d if max_features is None else max_features
        candidates = []
        for f in order:
            if budget == 0:
                break
            x = Xn[:, f]
            if x.min() == x.max():
                continue
            budget -= 1
            if splitter == "random":
                gains, thr = _random_threshold_split(x, yn, wn, n_classes, impurity, parent,
                                                     min_samples_leaf, rng)
            else:
                gains, thr = _best_threshold_split(x, yn, wn, n_classes, impurity, parent,
                                                   min_samples_leaf)
            if gains is not None:
                candidates.append((int(f), gains, thr))
        split = choose_split(candidates)
        if split is None or split.gain <= MIN_GAIN:
            return node, None
        return node, split

    def expand(node, idx, split):
        tree.feature[node] = split.feature
        tree.threshold[node] = split.threshold
        go_left = X[idx, split.feature] <= split.threshold
        return idx[go_left], idx[~go_left]

    root_idx = np.arange(n)
    root, root_split = make_node(root_idx, 0)
    if max_leaf_nodes is None:
        stack = [(root, root_idx, root_split)]
        while stack:
            node, idx, split = stack.pop()
            if split is None:
                continue
            li, ri = expand(node, idx, split)
            depth = tree.depth[node] + 1
            left, lsplit = make_node(li, depth)
            right, rsplit = make_node(ri, depth)
            tree.left[node], tree.right[node] = left, right
            stack.append((right, ri, rsplit))
            stack.append((left, li, lsplit))
    else:
        heap = []
        leaves = 1

        def push(node, idx, split):
            if split is not None:
                priority = -split.gain * w[idx].sum() / w_root
                heapq.heappush(heap, (priority, node, idx, split))

        push(root, root_idx, root_split)
        while heap and leaves < max_leaf_nodes:
            _, node, idx, split = heapq.heappop(heap)
            li, ri = expand(node, idx, split)
            depth = tree.depth[node] + 1
            left, lsplit = make_node(li, depth)
            right, rsplit = make_node(ri, depth)
            tree.left[node], tree.right[node] = left, right
            leaves += 1
            push(left, li, lsplit)
            push(right, ri, rsplit)
    return tree.finalize()


class DecisionTree(Classifier):
    """Single CART tree.  Defaults: entropy splits, at least 7 rows per leaf."""

    kind = "decision_tree"
    _params = ("criterion", "min_samples_leaf", "max_depth", "max_leaf_nodes", "seed")

    def __init__(self, criterion="entropy", min_samples_leaf=7, max_depth=None, max_leaf_nodes=None, seed=0):
        self.criterion = criterion
        self.min_samples_leaf = min_samples_leaf
        self.max_depth = max_depth
        self.max_leaf_nodes = max_leaf_nodes
        self.seed = seed

    def fit(self, X, y, n_classes=None, sample_weight=None):
        X, y = self._start_fit(X, y, n_classes)
        self.tree_ = grow_tree(X, y, self.n_classes_, criterion=self.criterion, max_depth=self.max_depth,
                               min_samples_leaf=self.min_samples_leaf, max_leaf_nodes=self.max_leaf_nodes,
                               sample_weight=sample_weight)
        return self

    def predict_proba(self, X):
        return self.tree_.predict_proba(self._check_X(X))

    def summary(self):
        s = super().summary()
        if hasattr(self, "tree_"):
            s.update(depth=self.tree_.max_depth, leaves=self.tree_.n_leaves, nodes=self.tree_.node_count)
        return s
