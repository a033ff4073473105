"""Evaluation statistics: regression (MSE, RMSE, R², Spearman) and the
stabilizing/destabilizing classification counts.

Sign convention: a positive stability change is destabilizing, a negative
one stabilizing; exactly zero counts as stabilizing.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from thermofuse.errors import DomainError, MetricUndefinedError, ShapeError

DESTABILIZING = "destabilizing"
STABILIZING = "stabilizing"


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeError(f"need equal-length vectors, got {x.shape} and {y.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("metric inputs must be finite")
    return x, y


def average_ranks(x) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank run."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.dot(xc, xc))
    sy = float(np.dot(yc, yc))
    if sx == 0.0 or sy == 0.0:
        raise MetricUndefinedError("correlation undefined for a constant vector")
    return float(np.dot(xc, yc)) / math.sqrt(sx * sy)


def spearman(x, y) -> float:
    """Pearson correlation of average ranks (ties take the mid-rank)."""
    x, y = _pair(x, y)
    if len(x) < 2:
        raise DomainError("spearman needs at least two observations")
    return _pearson(average_ranks(x), average_ranks(y))


def mse(pred, target) -> float:
    pred, target = _pair(pred, target)
    if pred.size == 0:
        raise DomainError("mse of empty vectors")
    d = pred - target
    return float(np.mean(d * d))


def rmse(pred, target) -> float:
    return math.sqrt(mse(pred, target))


def r2(pred, target) -> float:
    """Coefficient of determination, 1 - SS_res / SS_tot (not symmetric)."""
    pred, target = _pair(pred, target)
    if len(pred) < 2:
        raise DomainError("r2 needs at least two observations")
    ss_tot = float(np.sum((target - target.mean()) ** 2))
    if ss_tot == 0.0:
        raise MetricUndefinedError("r2 undefined for a constant target")
    ss_res = float(np.sum((pred - target) ** 2))
    return 1.0 - ss_res / ss_tot


@dataclass
class RegressionReport:
    mse: float
    rmse: float
    r2: float
    spearman: float
    n: int

    def as_dict(self) -> dict:
        return {"mse": self.mse, "rmse": self.rmse, "r2": self.r2,
                "spearman": self.spearman, "n": self.n}


def regression_report(pred, target) -> RegressionReport:
    pred, target = _pair(pred, target)
    if len(pred) < 2:
        raise DomainError("regression report needs at least two observations")
    m = mse(pred, target)
    return RegressionReport(mse=m, rmse=math.sqrt(m), r2=r2(pred, target),
                            spearman=spearman(pred, target), n=len(pred))


def classify_sign(ddg: float) -> str:
    """Positive stability change destabilizes; zero or negative stabilizes."""
    if not math.isfinite(ddg):
        raise DomainError("cannot classify a non-finite stability change")
    return DESTABILIZING if ddg > 0.0 else STABILIZING


@dataclass
class ClassificationReport:
    accuracy: float
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    tp: int
    fp: int
    tn: int
    fn: int

    def as_dict(self) -> dict:
        return {"accuracy": self.accuracy, "precision": self.precision,
                "recall": self.recall, "f1": self.f1, "tp": self.tp,
                "fp": self.fp, "tn": self.tn, "fn": self.fn}


def classification_report(pred_labels, true_labels,
                          positive: str = DESTABILIZING) -> ClassificationReport:
    """Confusion counts and derived rates; undefined rates come back None."""
    pred_labels = list(pred_labels)
    true_labels = list(true_labels)
    if len(pred_labels) != len(true_labels):
        raise ShapeError("label vectors differ in length")
    if not pred_labels:
        raise DomainError("classification report needs at least one pair")
    tp = fp = tn = fn = 0
    for p, t in zip(pred_labels, true_labels):
        if p == positive:
            if t == positive:
                tp += 1
            else:
                fp += 1
        else:
            if t == positive:
                fn += 1
            else:
                tn += 1
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    elif precision is not None and recall is not None:
        f1 = 0.0
    else:
        f1 = None
    return ClassificationReport(accuracy=(tp + tn) / len(pred_labels),
                                precision=precision, recall=recall, f1=f1,
                                tp=tp, fp=fp, tn=tn, fn=fn)
