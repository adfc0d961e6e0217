"""Stratified k-fold planning, per-class metrics, and the cross-validation runner.

Reports mirror the Positive / Negative / Neutral P, R, F1 + Accuracy column
layout of the reference experiments, in both aligned-text and JSON form.
Pooled metrics (one confusion matrix over all test folds) are the headline
numbers; per-fold means are reported alongside.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Dataset

LABELS = (-1, 0, 1)
_CLASS_COLUMNS = (("Positive", 2), ("Negative", 0), ("Neutral", 1))


class FoldError(RuntimeError):
    """A cross-validation fold failed; carries the fold index."""


@dataclass(frozen=True)
class FoldPlan:
    """Disjoint test-fold index lists covering every dataset position."""

    folds: tuple[tuple[int, ...], ...]

    @property
    def k(self) -> int:
        return len(self.folds)

    def train_indices(self, fold: int) -> list[int]:
        return [i for j, f in enumerate(self.folds) if j != fold for i in f]


def stratified_kfold(labels: Sequence[int], k: int, seed: int) -> FoldPlan:
    """Shuffle each class with the seed, then deal its indices round-robin."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    rng = random.Random(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in LABELS:
        members = [i for i, y in enumerate(labels) if y == cls]
        if len(members) < k:
            raise ValueError(
                f"class {cls} has only {len(members)} members, fewer than k={k}"
            )
        rng.shuffle(members)
        for pos, idx in enumerate(members):
            folds[pos % k].append(idx)
    return FoldPlan(folds=tuple(tuple(f) for f in folds))


@dataclass(frozen=True)
class Metrics:
    """3x3 confusion matrix (rows gold, cols predicted, class order [-1, 0, +1])
    with per-class precision/recall/F1 and overall accuracy; 0/0 counts as 0."""

    confusion: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    accuracy: float

    def per_class(self, label: int) -> tuple[float, float, float]:
        i = LABELS.index(label)
        return float(self.precision[i]), float(self.recall[i]), float(self.f1[i])


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    return np.divide(num, den, out=np.zeros_like(num, dtype=float), where=den != 0)


def metrics_from_confusion(confusion: np.ndarray) -> Metrics:
    confusion = np.asarray(confusion, dtype=np.int64)
    diag = np.diag(confusion).astype(float)
    precision = _safe_div(diag, confusion.sum(axis=0).astype(float))
    recall = _safe_div(diag, confusion.sum(axis=1).astype(float))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    accuracy = float(diag.sum() / confusion.sum())
    return Metrics(confusion=confusion, precision=precision, recall=recall, f1=f1,
                   accuracy=accuracy)


def compute_metrics(gold: Sequence[int], pred: Sequence[int]) -> Metrics:
    if len(gold) != len(pred):
        raise ValueError(f"gold and pred lengths differ: {len(gold)} vs {len(pred)}")
    if len(gold) == 0:
        raise ValueError("cannot compute metrics on empty inputs")
    confusion = np.zeros((3, 3), dtype=np.int64)
    for g, p in zip(gold, pred):
        confusion[LABELS.index(g), LABELS.index(p)] += 1
    return metrics_from_confusion(confusion)


@dataclass(frozen=True)
class CrossValReport:
    title: str
    dataset_name: str
    k: int
    seed: int
    fold_metrics: tuple[Metrics, ...]
    pooled: Metrics

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean([m.accuracy for m in self.fold_metrics]))

    def mean_per_class(self, label: int) -> tuple[float, float, float]:
        triples = [m.per_class(label) for m in self.fold_metrics]
        return tuple(float(np.mean([t[i] for t in triples])) for i in range(3))


def run_crossval(dataset: Dataset, config, k: int, seed: int) -> CrossValReport:
    """Fit the configured pipeline on k-1 folds and score the held-out fold.

    Every fitted artifact (vocabulary, aspect ids, idf weights, embedding
    draws) is rebuilt from the training folds alone.
    """
    from .pipeline import build_pipeline  # deferred: pipeline imports this module's types

    labels = [inst.polarity for inst in dataset]
    plan = stratified_kfold(labels, k, seed)
    instances = dataset.instances
    fold_metrics = []
    all_gold: list[int] = []
    all_pred: list[int] = []
    for fold_idx, test_fold in enumerate(plan.folds):
        try:
            train_insts = [instances[i] for i in plan.train_indices(fold_idx)]
            test_insts = [instances[i] for i in test_fold]
            pipe = build_pipeline(config).fit(train_insts)
            pred = pipe.predict(test_insts)
        except Exception as exc:
            raise FoldError(f"fold {fold_idx}: {exc}") from exc
        gold = [inst.polarity for inst in test_insts]
        fold_metrics.append(compute_metrics(gold, pred))
        all_gold.extend(gold)
        all_pred.extend(pred)
    title = getattr(config, "title", None) or f"{config.model}+{config.features}"
    return CrossValReport(
        title=title,
        dataset_name=dataset.name,
        k=k,
        seed=seed,
        fold_metrics=tuple(fold_metrics),
        pooled=compute_metrics(all_gold, all_pred),
    )


def render_report_text(report: CrossValReport) -> str:
    """Aligned table with the Positive/Negative/Neutral P,R,F1 + Accuracy layout."""
    mean_cells = [
        f"{v:.4f}"
        for _, class_idx in _CLASS_COLUMNS
        for v in report.mean_per_class(LABELS[class_idx])
    ]
    rows = [
        (f"{report.title} (pooled)", report.dataset_name,
         *_metric_cells(report.pooled), f"{report.pooled.accuracy:.4f}"),
        (f"{report.title} (fold-mean)", report.dataset_name,
         *mean_cells, f"{report.mean_accuracy:.4f}"),
    ]
    lines = [_group_header(), _column_header()]
    for row in rows:
        lines.append(
            f"{row[0]:<28}{row[1]:<10}" + "".join(f"{c:<8}" for c in row[2:-1]) + row[-1]
        )
    return "\n".join(lines) + "\n"


def render_metrics_text(title: str, dataset_name: str, metrics: Metrics) -> str:
    """One-row table for a single evaluation, same column layout as the reports."""
    lines = [_group_header(), _column_header()]
    lines.append(
        f"{title:<28}{dataset_name:<10}"
        + "".join(f"{c:<8}" for c in _metric_cells(metrics))
        + f"{metrics.accuracy:.4f}"
    )
    return "\n".join(lines) + "\n"


def _group_header() -> str:
    return (
        f"{'':<28}{'':<10}"
        f"{'Positive Class':<24}{'Negative Class':<24}{'Neutral Class':<24}"
    )


def _column_header() -> str:
    return (
        f"{'Classifier':<28}{'Dataset':<10}"
        + "".join(f"{c:<8}" for c in ("P", "R", "F1") * 3)
        + "Accuracy"
    )


def _metric_cells(metrics: Metrics) -> list[str]:
    cells = []
    for _, class_idx in _CLASS_COLUMNS:
        label = LABELS[class_idx]
        for value in metrics.per_class(label):
            cells.append(f"{value:.4f}")
    return cells


def metrics_to_dict(metrics: Metrics) -> dict:
    by_class = {}
    for name, class_idx in _CLASS_COLUMNS:
        label = LABELS[class_idx]
        p, r, f1 = metrics.per_class(label)
        by_class[name.lower()] = {"precision": p, "recall": r, "f1": f1}
    return {
        "confusion": metrics.confusion.tolist(),
        "classes": by_class,
        "accuracy": metrics.accuracy,
    }


def report_to_dict(report: CrossValReport) -> dict:
    mean_classes = {}
    for name, class_idx in _CLASS_COLUMNS:
        p, r, f1 = report.mean_per_class(LABELS[class_idx])
        mean_classes[name.lower()] = {"precision": p, "recall": r, "f1": f1}
    return {
        "classifier": report.title,
        "dataset": report.dataset_name,
        "k": report.k,
        "seed": report.seed,
        "folds": [metrics_to_dict(m) for m in report.fold_metrics],
        "mean": {"classes": mean_classes, "accuracy": report.mean_accuracy},
        "pooled": metrics_to_dict(report.pooled),
    }
