"""Confusion counts, support-weighted binary metrics and ROC analysis."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from hif_rplot.errors import DataError


@dataclass(frozen=True)
class ConfusionMatrix:
    n_tp: int
    n_tn: int
    n_fp: int
    n_fn: int

    @property
    def total(self) -> int:
        return self.n_tp + self.n_tn + self.n_fp + self.n_fn

    @classmethod
    def from_labels(cls, y_true, y_pred) -> "ConfusionMatrix":
        t = np.asarray(y_true).astype(bool)
        p = np.asarray(y_pred).astype(bool)
        return cls(
            n_tp=int(np.count_nonzero(t & p)),
            n_tn=int(np.count_nonzero(~t & ~p)),
            n_fp=int(np.count_nonzero(~t & p)),
            n_fn=int(np.count_nonzero(t & ~p)),
        )


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


def _ratio(num, den) -> float:
    return num / den if den else 0.0


def _class_scores(tp, fp, fn, support) -> ClassScores:
    p = _ratio(tp, tp + fp)
    r = _ratio(tp, tp + fn)
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return ClassScores(p, r, f1, support)


@dataclass
class MetricsReport:
    confusion: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: float
    per_class: dict  # {0: ClassScores, 1: ClassScores}
    train_time: float = 0.0
    test_time: float = 0.0
    classifier: Optional[str] = None
    hyperparams: dict = field(default_factory=dict)
    seed: Optional[int] = None
    split: str = ""
    stage: Optional[int] = None


def roc_curve(y_true, scores) -> list[tuple[float, float]]:
    """ROC points (FPR, TPR) for thresholds at each distinct score, descending.

    Equal scores enter together, giving one diagonal segment per tie group.
    """
    tp, fp, n_pos, n_neg = _roc_counts(y_true, scores)
    return [(f / n_neg, t / n_pos) for f, t in zip(fp, tp)]


def _roc_counts(y_true, scores):
    y = np.asarray(y_true).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape or y.ndim != 1:
        raise DataError("labels and scores must be 1-D of equal length")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC needs both classes present")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last = np.r_[np.nonzero(s[1:] != s[:-1])[0], y.size - 1]
    tp = np.r_[0, np.cumsum(y)[last]]
    fp = np.r_[0, np.cumsum(~y)[last]]
    return tp.astype(np.int64), fp.astype(np.int64), n_pos, n_neg


def roc_auc(y_true, scores) -> float:
    """Trapezoidal area under the ROC curve (ties count one half)."""
    tp, fp, n_pos, n_neg = _roc_counts(y_true, scores)
    # twice the area in count units; exact in integers
    twice = int(np.sum(np.diff(fp) * (tp[1:] + tp[:-1])))
    return twice / (2 * n_pos * n_neg)


def compute_metrics(y_true, y_pred, scores, **info) -> MetricsReport:
    """Metrics with per-class precision/recall/F1 averaged by class support.

    With this averaging the reported recall equals the accuracy for a
    two-class problem.  F1 of a class is 0 when its precision and recall
    are both 0.
    """
    y_true = np.asarray(y_true).astype(np.int64)
    y_pred = np.asarray(y_pred).astype(np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if not (y_true.shape == y_pred.shape == scores.shape) or y_true.ndim != 1:
        raise DataError("y_true, y_pred and scores must have the same length")
    if y_true.size == 0:
        raise DataError("no evaluated events")
    cm = ConfusionMatrix.from_labels(y_true, y_pred)
    n = cm.total
    pos = _class_scores(cm.n_tp, cm.n_fp, cm.n_fn, cm.n_tp + cm.n_fn)
    neg = _class_scores(cm.n_tn, cm.n_fn, cm.n_fp, cm.n_tn + cm.n_fp)

    def weighted(attr):
        return (getattr(pos, attr) * pos.support + getattr(neg, attr) * neg.support) / n

    return MetricsReport(
        confusion=cm,
        accuracy=(cm.n_tp + cm.n_tn) / n,
        precision=weighted("precision"),
        recall=weighted("recall"),
        f1=weighted("f1"),
        roc_auc=roc_auc(y_true, scores),
        per_class={0: neg, 1: pos},
        **info,
    )
