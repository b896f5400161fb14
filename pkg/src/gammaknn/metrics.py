"""Confusion counts, precision/recall and the F-measure for +1/-1 labels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, DataError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.fn + other.fn, self.tn + other.tn)


def confusion(y_true, y_pred) -> ConfusionCounts:
    y_true = np.asarray(y_true).ravel()
    y_pred = np.asarray(y_pred).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted")
    t, p = y_true == 1, y_pred == 1
    return ConfusionCounts(
        tp=int(np.count_nonzero(t & p)),
        fp=int(np.count_nonzero(~t & p)),
        fn=int(np.count_nonzero(t & ~p)),
        tn=int(np.count_nonzero(~t & ~p)),
    )


def f_measure(c: ConfusionCounts) -> float:
    """F1 = 2TP / (2TP + FN + FP), defined as 0 when nothing is positive."""
    denom = 2 * c.tp + c.fn + c.fp
    return 2 * c.tp / denom if denom else 0.0


def precision_recall(c: ConfusionCounts) -> tuple[float, float]:
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    return precision, recall


def f1_score(y_true, y_pred) -> float:
    return f_measure(confusion(y_true, y_pred))


def imbalance_ratio(data: Dataset) -> float:
    """m- / m+."""
    if data.n_pos == 0:
        raise DataError("imbalance ratio undefined without positives")
    return data.n_neg / data.n_pos
