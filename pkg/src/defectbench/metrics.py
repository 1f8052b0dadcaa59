"""Confusion counts, recall, balanced accuracy, and mean/std aggregation.

Label 1 (defective) is the positive class. Metrics whose denominator would be
zero raise :class:`UndefinedMetricError` instead of returning 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class UndefinedMetricError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def swapped(self) -> "ConfusionMatrix":
        """Same predictions with label 0 treated as positive."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float
    count: int


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t = np.asarray(y_true)
    p = np.asarray(y_pred)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError(f"shape mismatch: {t.shape} vs {p.shape}")
    if len(t) == 0:
        raise ValueError("cannot score an empty prediction")
    for a in (t, p):
        if not np.all((a == 0) | (a == 1)):
            raise ValueError("labels must be 0 or 1")
    t = t.astype(bool)
    p = p.astype(bool)
    return ConfusionMatrix(tp=int(np.sum(t & p)), fp=int(np.sum(~t & p)),
                           tn=int(np.sum(~t & ~p)), fn=int(np.sum(t & ~p)))


def recall(cm: ConfusionMatrix) -> float:
    if cm.tp + cm.fn == 0:
        raise UndefinedMetricError("recall is undefined without actual positives")
    return cm.tp / (cm.tp + cm.fn)


def balanced_accuracy(cm: ConfusionMatrix) -> float:
    if cm.tn + cm.fp == 0:
        raise UndefinedMetricError("balanced accuracy needs actual negatives")
    return (cm.tn / (cm.tn + cm.fp) + recall(cm)) / 2


def aggregate(values: Sequence[float]) -> MetricSummary:
    """Mean and sample (n - 1) standard deviation; std is 0 for a single value."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("cannot aggregate an empty list")
    mean = float(v.mean())
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return MetricSummary(mean, std, int(v.size))
