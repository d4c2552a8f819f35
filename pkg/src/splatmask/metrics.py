"""Segmentation and ranking metrics, plus a deterministic k-fold splitter.

Hard-mask metrics derive from a confusion count; ranking metrics take a
score vector and binary labels. AUC uses the rank-statistic form (ties
count one half), which agrees with trapezoidal ROC integration but is
exactly checkable against an all-pairs oracle. Average precision is the
non-interpolated step sum, with ties broken by stable input order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndefinedMetricError
from .grid import as_mask, check_same_shape


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class EvalReport:
    """One evaluation run; auc and average_precision are None when only
    hard labels exist."""

    jaccard: float
    dice: float
    accuracy: float
    sensitivity: float
    specificity: float
    auc: float | None = None
    average_precision: float | None = None

    def to_dict(self) -> dict:
        return {
            "jaccard": self.jaccard,
            "dice": self.dice,
            "accuracy": self.accuracy,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "auc": self.auc,
            "average_precision": self.average_precision,
        }


def confusion(pred: np.ndarray, gt: np.ndarray) -> ConfusionCounts:
    """Pixelwise confusion counts between two binary masks."""
    pred = as_mask(pred)
    gt = as_mask(gt)
    check_same_shape(pred, gt)
    p = pred.astype(bool)
    g = gt.astype(bool)
    return ConfusionCounts(
        tp=int(np.sum(p & g)),
        fp=int(np.sum(p & ~g)),
        tn=int(np.sum(~p & ~g)),
        fn=int(np.sum(~p & g)),
    )


def _ratio(num: int, den: int, name: str) -> float:
    if den == 0:
        raise UndefinedMetricError(f"{name} undefined: zero denominator")
    return num / den


def jaccard(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fp + c.fn, "jaccard")


def dice_score(c: ConfusionCounts) -> float:
    return _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, "dice")


def pixel_accuracy(c: ConfusionCounts) -> float:
    return _ratio(c.tp + c.tn, c.total, "accuracy")


def sensitivity(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fn, "sensitivity")


def specificity(c: ConfusionCounts) -> float:
    return _ratio(c.tn, c.tn + c.fp, "specificity")


def _check_scores_labels(scores, labels):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValueError(f"scores shape {scores.shape} != labels shape {labels.shape}")
    if scores.size == 0:
        raise ValueError("empty score vector")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    return scores, labels.astype(np.int64)


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks, equal scores sharing the mean of their rank range."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def roc_auc(scores, labels) -> float:
    """Probability a random positive outscores a random negative, ties 1/2.

    Computed as the normalized rank-sum statistic, which is exactly the
    fraction of correctly ordered positive/negative pairs.
    """
    scores, labels = _check_scores_labels(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("roc_auc needs both classes present")
    ranks = _average_ranks(scores)
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _descending_order(scores: np.ndarray) -> np.ndarray:
    # stable sort on negated scores keeps input order within tied groups
    return np.argsort(-scores, kind="stable")


def average_precision(scores, labels) -> float:
    """Mean of precision-at-k over the ranks k holding a positive."""
    scores, labels = _check_scores_labels(scores, labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise UndefinedMetricError("average_precision needs at least one positive")
    ordered = labels[_descending_order(scores)]
    hits = np.cumsum(ordered)
    ks = np.nonzero(ordered == 1)[0] + 1
    return float(np.sum(hits[ks - 1] / ks) / n_pos)


def pr_curve(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    """(recall, precision) at every prefix of the descending-score ranking."""
    scores, labels = _check_scores_labels(scores, labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise UndefinedMetricError("pr_curve needs at least one positive")
    ordered = labels[_descending_order(scores)]
    hits = np.cumsum(ordered)
    ks = np.arange(1, ordered.size + 1)
    return hits / n_pos, hits / ks


def evaluate_masks(pred: np.ndarray, gt: np.ndarray) -> EvalReport:
    """Full hard-mask report from a prediction/ground-truth pair."""
    c = confusion(pred, gt)
    return EvalReport(
        jaccard=jaccard(c),
        dice=dice_score(c),
        accuracy=pixel_accuracy(c),
        sensitivity=sensitivity(c),
        specificity=specificity(c),
    )


def evaluate_scores(scores, labels, hard_threshold: float = 0.5) -> EvalReport:
    """Report for scored samples: ranking metrics plus hard metrics at a
    score threshold (inclusive, matching grid.threshold)."""
    scores, labels = _check_scores_labels(scores, labels)
    pred = (scores >= hard_threshold).astype(np.uint8).reshape(1, -1)
    c = confusion(pred, labels.astype(np.uint8).reshape(1, -1))
    return EvalReport(
        jaccard=jaccard(c),
        dice=dice_score(c),
        accuracy=pixel_accuracy(c),
        sensitivity=sensitivity(c),
        specificity=specificity(c),
        auc=roc_auc(scores, labels),
        average_precision=average_precision(scores, labels),
    )


@dataclass(frozen=True)
class FoldAssignment:
    """Partition of n samples into k folds with sizes differing by at most 1."""

    k: int
    fold_of: np.ndarray  # fold index per sample

    def indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.fold_of == fold)[0]


def kfold_split(n: int, k: int, seed: int, stratify=None) -> FoldAssignment:
    """Shuffle with a seeded generator, then deal samples round-robin.

    stratify, when given, is a label per sample; dealing then happens
    within each label group so folds keep the label mix.
    """
    if not (isinstance(n, (int, np.integer)) and isinstance(k, (int, np.integer))):
        raise ValueError("n and k must be integers")
    if k < 2 or n < k:
        raise ValueError(f"need n >= k >= 2, got n={n}, k={k}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    if stratify is None:
        perm = rng.permutation(n)
        fold_of[perm] = np.arange(n) % k
    else:
        stratify = np.asarray(stratify).ravel()
        if stratify.shape != (n,):
            raise ValueError(f"stratify must have length {n}")
        offset = 0
        for value in np.unique(stratify):
            members = np.nonzero(stratify == value)[0]
            perm = members[rng.permutation(members.size)]
            fold_of[perm] = (np.arange(members.size) + offset) % k
            offset += members.size
    return FoldAssignment(k=int(k), fold_of=fold_of)
