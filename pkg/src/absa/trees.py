"""Binary CART trees over dense feature matrices.

One array-based tree type serves three users: Gini classification trees,
randomized-threshold (extra) trees, and squared-error regression trees for
gradient boosting. Split ties break deterministically: lowest feature index,
then lowest threshold. Samples with x[feature] <= threshold go left.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

LEAF = -1


@dataclass
class Tree:
    feature: np.ndarray    # (n_nodes,) int64, LEAF marks leaves
    threshold: np.ndarray  # (n_nodes,) float64
    left: np.ndarray       # (n_nodes,) int64 child index, LEAF at leaves
    right: np.ndarray      # (n_nodes,) int64
    value: np.ndarray      # (n_nodes, k) leaf payload: class distribution or scalar

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node index for every row of X."""
        out = np.empty(len(X), dtype=np.int64)
        for i, row in enumerate(X):
            node = 0
            while self.feature[node] != LEAF:
                node = self.left[node] if row[self.feature[node]] <= self.threshold[node] else self.right[node]
            out[i] = node
        return out

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


class _Builder:
    """Accumulates nodes during recursive growth; children patched in post order."""

    def __init__(self, value_width: int):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[np.ndarray] = []
        self.width = value_width

    def add(self, value: np.ndarray) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(np.asarray(value, dtype=float).reshape(self.width))
        return len(self.feature) - 1

    def finish(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=float),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=np.stack(self.value),
        )


def _gini_weighted(counts_left: np.ndarray, counts_right: np.ndarray) -> np.ndarray:
    """Weighted Gini impurity for candidate splits, rows = candidates."""
    n_l = counts_left.sum(axis=1)
    n_r = counts_right.sum(axis=1)
    n = n_l + n_r
    g_l = 1.0 - ((counts_left / n_l[:, None]) ** 2).sum(axis=1)
    g_r = 1.0 - ((counts_right / n_r[:, None]) ** 2).sum(axis=1)
    return (n_l * g_l + n_r * g_r) / n


def _best_split_gini(X: np.ndarray, Y: np.ndarray, features: np.ndarray):
    """Best (feature, threshold) by weighted Gini over all midpoint candidates."""
    n = len(X)
    total = Y.sum(axis=0)
    best = None
    for j in features:
        order = np.argsort(X[:, j], kind="mergesort")
        xs = X[order, j]
        cum = np.cumsum(Y[order], axis=0)
        pos = np.nonzero(xs[1:] > xs[:-1])[0] + 1
        if len(pos) == 0:
            continue
        left = cum[pos - 1]
        score = _gini_weighted(left, total[None, :] - left)
        i = int(np.argmin(score))  # first minimum: lowest threshold wins ties
        if best is None or score[i] < best[0]:
            thr = (xs[pos[i] - 1] + xs[pos[i]]) / 2.0
            best = (float(score[i]), int(j), thr)
    return best


def _best_split_gini_random(
    X: np.ndarray, Y: np.ndarray, features: np.ndarray, rng: np.random.Generator
):
    """Extra-trees splitter: one uniform threshold per candidate feature."""
    total = Y.sum(axis=0)
    best = None
    for j in features:
        col = X[:, j]
        lo, hi = float(col.min()), float(col.max())
        if lo == hi:
            continue
        thr = float(rng.uniform(lo, hi))
        mask = col <= thr
        left = Y[mask].sum(axis=0)
        score = float(_gini_weighted(left[None, :], (total - left)[None, :])[0])
        if best is None or score < best[0]:
            best = (score, int(j), thr)
    return best


def _best_split_sse(X: np.ndarray, t: np.ndarray, features: np.ndarray):
    """Best (feature, threshold) minimizing total squared error of the two sides."""
    best = None
    n = len(X)
    total_sum = t.sum()
    total_sq = (t * t).sum()
    for j in features:
        order = np.argsort(X[:, j], kind="mergesort")
        xs = X[order, j]
        ts = t[order]
        cum = np.cumsum(ts)
        cum_sq = np.cumsum(ts * ts)
        pos = np.nonzero(xs[1:] > xs[:-1])[0] + 1
        if len(pos) == 0:
            continue
        n_l = pos.astype(float)
        s_l = cum[pos - 1]
        q_l = cum_sq[pos - 1]
        sse_l = q_l - s_l * s_l / n_l
        n_r = n - n_l
        s_r = total_sum - s_l
        sse_r = (total_sq - q_l) - s_r * s_r / n_r
        score = sse_l + sse_r
        i = int(np.argmin(score))
        if best is None or score[i] < best[0]:
            thr = (xs[pos[i] - 1] + xs[pos[i]]) / 2.0
            best = (float(score[i]), int(j), thr)
    return best


def _candidate_features(
    n_features: int, max_features: int | None, rng: np.random.Generator | None
) -> np.ndarray:
    if max_features is None or max_features >= n_features or rng is None:
        return np.arange(n_features)
    return np.sort(rng.choice(n_features, size=max_features, replace=False))


def grow_classification_tree(
    X: np.ndarray,
    y_idx: np.ndarray,
    n_classes: int,
    max_depth: int,
    min_samples_split: int,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
    random_thresholds: bool = False,
) -> Tree:
    """CART on class indices; leaves carry the class distribution of routed samples."""
    Y = np.zeros((len(y_idx), n_classes))
    Y[np.arange(len(y_idx)), y_idx] = 1.0
    builder = _Builder(value_width=n_classes)

    def build(idx: np.ndarray, depth: int) -> int:
        counts = Y[idx].sum(axis=0)
        node = builder.add(counts / counts.sum())
        if counts.max() == counts.sum():  # pure
            return node
        if depth >= max_depth or len(idx) < min_samples_split:
            return node
        feats = _candidate_features(X.shape[1], max_features, rng)
        if random_thresholds:
            split = _best_split_gini_random(X[idx], Y[idx], feats, rng)
            if split is None and len(feats) < X.shape[1]:
                split = _best_split_gini_random(X[idx], Y[idx], np.arange(X.shape[1]), rng)
        else:
            split = _best_split_gini(X[idx], Y[idx], feats)
            if split is None and len(feats) < X.shape[1]:
                split = _best_split_gini(X[idx], Y[idx], np.arange(X.shape[1]))
        if split is None:  # every feature constant in this node
            return node
        _, feat, thr = split
        mask = X[idx, feat] <= thr
        left = build(idx[mask], depth + 1)
        right = build(idx[~mask], depth + 1)
        builder.feature[node] = feat
        builder.threshold[node] = thr
        builder.left[node] = left
        builder.right[node] = right
        return node

    build(np.arange(len(X)), 0)
    return builder.finish()


def grow_regression_tree(
    X: np.ndarray,
    target: np.ndarray,
    max_depth: int,
    min_samples_split: int,
    leaf_value: Callable[[np.ndarray], float] | None = None,
) -> Tree:
    """Squared-error CART; leaf payload is leaf_value(routed indices), default the mean."""
    if leaf_value is None:
        leaf_value = lambda idx: float(target[idx].mean())
    builder = _Builder(value_width=1)

    def build(idx: np.ndarray, depth: int) -> int:
        node = builder.add(np.array([leaf_value(idx)]))
        if depth >= max_depth or len(idx) < min_samples_split:
            return node
        t = target[idx]
        if t.max() == t.min():  # constant target
            return node
        split = _best_split_sse(X[idx], t, np.arange(X.shape[1]))
        if split is None:
            return node
        _, feat, thr = split
        mask = X[idx, feat] <= thr
        left = build(idx[mask], depth + 1)
        right = build(idx[~mask], depth + 1)
        builder.feature[node] = feat
        builder.threshold[node] = thr
        builder.left[node] = left
        builder.right[node] = right
        return node

    build(np.arange(len(X)), 0)
    return builder.finish()
