"""Six classical sentiment classifiers behind one fit/predict surface.

All models map sparse FeatureVectors (densified internally; corpora are desk
scale) to labels in {-1, 0, +1}. Class indices order labels as [-1, 0, +1] and
every argmax tie resolves to the smaller class index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .encode import FeatureVector, to_matrix
from .numerics import softmax
from .trees import Tree, grow_classification_tree, grow_regression_tree

LABELS = (-1, 0, 1)
N_CLASSES = 3


@dataclass
class TreeParams:
    max_depth: int = 20
    min_samples_split: int = 2


@dataclass
class SvmParams:
    lam: float = 1e-4
    epochs: int = 20
    seed: int = 42


@dataclass
class ForestParams:
    n_trees: int = 100
    max_features: int | None = None  # None -> ceil(sqrt(D))
    bootstrap: bool = True
    seed: int = 42
    max_depth: int = 20
    min_samples_split: int = 2


@dataclass
class BoostParams:
    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    min_samples_split: int = 2
    seed: int = 42


def _as_matrix(X) -> np.ndarray:
    if isinstance(X, np.ndarray):
        return np.asarray(X, dtype=float)
    if len(X) and isinstance(X[0], FeatureVector):
        return to_matrix(X)
    return np.asarray(X, dtype=float)


def _labels_to_indices(y: Sequence[int]) -> np.ndarray:
    arr = np.asarray(y, dtype=np.int64)
    if arr.ndim != 1 or not np.isin(arr, LABELS).all():
        raise ValueError("labels must be a flat sequence over {-1, 0, +1}")
    return arr + 1


def _check_xy(Xd: np.ndarray, y_idx: np.ndarray):
    if len(Xd) != len(y_idx) or len(Xd) == 0:
        raise ValueError(f"need matching non-empty X and y, got {len(Xd)} and {len(y_idx)}")


@dataclass
class NaiveBayesModel:
    kind = "nb"
    alpha: float
    class_log_prior: np.ndarray   # (3,)
    feature_log_prob: np.ndarray  # (3, D)

    @property
    def dim(self) -> int:
        return self.feature_log_prob.shape[1]

    def scores(self, Xd: np.ndarray) -> np.ndarray:
        """Unnormalized joint log-probabilities ln P(x, c)."""
        return Xd @ self.feature_log_prob.T + self.class_log_prior


@dataclass
class DecisionTreeModel:
    kind = "dtree"
    tree: Tree
    dim: int

    def scores(self, Xd: np.ndarray) -> np.ndarray:
        return self.tree.predict_value(Xd)


@dataclass
class ForestModel:
    kind_tag: str  # "rforest" | "etrees"
    trees: list[Tree]
    dim: int

    @property
    def kind(self) -> str:
        return self.kind_tag

    def scores(self, Xd: np.ndarray) -> np.ndarray:
        """Hard vote counts per class."""
        votes = np.zeros((len(Xd), N_CLASSES))
        for tree in self.trees:
            picks = np.argmax(tree.predict_value(Xd), axis=1)
            votes[np.arange(len(Xd)), picks] += 1.0
        return votes


@dataclass
class SvmModel:
    kind = "svm"
    weights: np.ndarray  # (3, D), one-vs-rest
    bias: np.ndarray     # (3,)

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def scores(self, Xd: np.ndarray) -> np.ndarray:
        return Xd @ self.weights.T + self.bias


@dataclass
class BoostModel:
    kind = "gboost"
    trees: list[list[Tree]]  # [round][class]
    learning_rate: float
    dim: int

    def scores(self, Xd: np.ndarray) -> np.ndarray:
        F = np.zeros((len(Xd), N_CLASSES))
        for round_trees in self.trees:
            for c, tree in enumerate(round_trees):
                F[:, c] += self.learning_rate * tree.predict_value(Xd)[:, 0]
        return F


ClassicModel = NaiveBayesModel | DecisionTreeModel | ForestModel | SvmModel | BoostModel


def fit_naive_bayes(X, y, alpha: float = 1.0) -> NaiveBayesModel:
    """Multinomial NB with Laplace smoothing alpha over raw feature counts."""
    if alpha <= 0:
        raise ValueError(f"smoothing alpha must be > 0, got {alpha}")
    Xd = _as_matrix(X)
    y_idx = _labels_to_indices(y)
    _check_xy(Xd, y_idx)
    if (Xd < 0).any():
        raise ValueError("multinomial naive Bayes requires non-negative feature values")
    n, D = Xd.shape
    class_count = np.bincount(y_idx, minlength=N_CLASSES).astype(float)
    with np.errstate(divide="ignore"):
        class_log_prior = np.log(class_count / n)
    feat_count = np.zeros((N_CLASSES, D))
    for c in range(N_CLASSES):
        feat_count[c] = Xd[y_idx == c].sum(axis=0)
    smoothed = feat_count + alpha
    feature_log_prob = np.log(smoothed / smoothed.sum(axis=1, keepdims=True))
    return NaiveBayesModel(alpha=alpha, class_log_prior=class_log_prior,
                           feature_log_prob=feature_log_prob)


def fit_decision_tree(X, y, hp: TreeParams | None = None) -> DecisionTreeModel:
    """Greedy Gini CART over midpoint thresholds."""
    hp = hp or TreeParams()
    Xd = _as_matrix(X)
    y_idx = _labels_to_indices(y)
    _check_xy(Xd, y_idx)
    tree = grow_classification_tree(
        Xd, y_idx, N_CLASSES, max_depth=hp.max_depth, min_samples_split=hp.min_samples_split
    )
    return DecisionTreeModel(tree=tree, dim=Xd.shape[1])


def fit_svm(X, y, hp: SvmParams | None = None) -> SvmModel:
    """One-vs-rest linear SVMs trained with the Pegasos subgradient schedule."""
    hp = hp or SvmParams()
    Xd = _as_matrix(X)
    y_idx = _labels_to_indices(y)
    _check_xy(Xd, y_idx)
    if len(np.unique(y_idx)) < 2:
        raise ValueError("SVM training needs at least two distinct labels")
    n, D = Xd.shape
    W = np.zeros((N_CLASSES, D))
    b = np.zeros(N_CLASSES)
    for c in range(N_CLASSES):
        yb = np.where(y_idx == c, 1.0, -1.0)
        rng = np.random.default_rng(hp.seed)  # identical visit order for each class
        w = np.zeros(D)
        bias = 0.0
        t = 0
        for _ in range(hp.epochs):
            for i in rng.permutation(n):
                t += 1
                eta = 1.0 / (hp.lam * t)
                margin = yb[i] * (w @ Xd[i] + bias)
                w *= 1.0 - eta * hp.lam
                if margin < 1.0:
                    w += eta * yb[i] * Xd[i]
                    bias += eta * yb[i]
        W[c] = w
        b[c] = bias
    return SvmModel(weights=W, bias=b)


def _forest_max_features(hp_max_features: int | None, D: int) -> int:
    return hp_max_features if hp_max_features is not None else math.ceil(math.sqrt(D))


def fit_random_forest(X, y, hp: ForestParams | None = None) -> ForestModel:
    """Bagged Gini CART trees with per-split feature subsampling."""
    hp = hp or ForestParams()
    return ForestModel(
        kind_tag="rforest",
        trees=_grow_forest(X, y, hp, bootstrap=hp.bootstrap, random_thresholds=False),
        dim=_as_matrix(X).shape[1],
    )


def fit_extra_trees(X, y, hp: ForestParams | None = None) -> ForestModel:
    """Extremely randomized trees: no bootstrap by default, uniform random thresholds."""
    hp = hp or ForestParams(bootstrap=False)
    return ForestModel(
        kind_tag="etrees",
        trees=_grow_forest(X, y, hp, bootstrap=hp.bootstrap, random_thresholds=True),
        dim=_as_matrix(X).shape[1],
    )


def _grow_forest(X, y, hp: ForestParams, bootstrap: bool, random_thresholds: bool) -> list[Tree]:
    Xd = _as_matrix(X)
    y_idx = _labels_to_indices(y)
    _check_xy(Xd, y_idx)
    if hp.n_trees < 1:
        raise ValueError(f"n_trees must be >= 1, got {hp.n_trees}")
    n, D = Xd.shape
    mf = _forest_max_features(hp.max_features, D)
    trees = []
    for seq in np.random.SeedSequence(hp.seed).spawn(hp.n_trees):
        rng = np.random.default_rng(seq)
        if bootstrap:
            sample = rng.integers(0, n, size=n)
            Xs, ys = Xd[sample], y_idx[sample]
        else:
            Xs, ys = Xd, y_idx
        trees.append(
            grow_classification_tree(
                Xs, ys, N_CLASSES,
                max_depth=hp.max_depth,
                min_samples_split=hp.min_samples_split,
                max_features=mf,
                rng=rng,
                random_thresholds=random_thresholds,
            )
        )
    return trees


def fit_gradient_boosting(X, y, hp: BoostParams | None = None) -> BoostModel:
    """First-order multiclass gradient boosting on softmax cross-entropy.

    Each round fits one squared-error regression tree per class to the
    residual onehot - softmax(scores); leaves take the Newton-style estimate
    sum(r) / sum(|r| (1 - |r|)) clipped to [-4, 4].
    """
    hp = hp or BoostParams()
    Xd = _as_matrix(X)
    y_idx = _labels_to_indices(y)
    _check_xy(Xd, y_idx)
    if len(np.unique(y_idx)) < 2:
        raise ValueError("gradient boosting needs at least two distinct labels")
    n = len(Xd)
    onehot = np.zeros((n, N_CLASSES))
    onehot[np.arange(n), y_idx] = 1.0
    F = np.zeros((n, N_CLASSES))
    rounds: list[list[Tree]] = []
    for _ in range(hp.n_rounds):
        residual = onehot - softmax(F, axis=1)
        round_trees = []
        for c in range(N_CLASSES):
            r = residual[:, c]

            def newton_leaf(idx: np.ndarray, r=r) -> float:
                rr = r[idx]
                denom = np.sum(np.abs(rr) * (1.0 - np.abs(rr)))
                if denom < 1e-12:
                    return 0.0
                return float(np.clip(rr.sum() / denom, -4.0, 4.0))

            tree = grow_regression_tree(
                Xd, r,
                max_depth=hp.max_depth,
                min_samples_split=hp.min_samples_split,
                leaf_value=newton_leaf,
            )
            F[:, c] += hp.learning_rate * tree.predict_value(Xd)[:, 0]
            round_trees.append(tree)
        rounds.append(round_trees)
    return BoostModel(trees=rounds, learning_rate=hp.learning_rate, dim=Xd.shape[1])


def predict(model: ClassicModel, X) -> list[int]:
    """Labels in {-1, 0, +1} for each input; ties go to the smaller class index."""
    if isinstance(X, (list, tuple)) and len(X) == 0:
        return []
    Xd = _as_matrix(X)
    if Xd.ndim != 2 or Xd.shape[1] != model.dim:
        raise ValueError(
            f"feature dimensionality {Xd.shape[1] if Xd.ndim == 2 else Xd.shape} "
            f"does not match model dimensionality {model.dim}"
        )
    picks = np.argmax(model.scores(Xd), axis=1)
    return [LABELS[i] for i in picks]
