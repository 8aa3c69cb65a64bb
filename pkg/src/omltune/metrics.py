"""Binary-classification metrics with automatic optimization direction.

All metrics consume a sequence of true labels in {0, 1} and a sequence of
predicted scores in [0, 1].  Label-based metrics threshold the scores at
0.5, with ties (score exactly 0.5) mapped to class 1.  ``roc_auc_score``
uses the raw scores and ``hinge_loss`` uses probability-derived margins
``2 * score - 1``.

A metric whose defining denominator vanishes (no positives for recall, a
single-class window for AUC, ...) evaluates to ``None`` rather than a
silent zero; callers are expected to treat ``None`` as "undefined" and
exclude it from any averaging.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

METRIC_IDS = (
    "accuracy_score",
    "cohen_kappa_score",
    "f1_score",
    "hamming_loss",
    "hinge_loss",
    "jaccard_score",
    "matthews_corrcoef",
    "precision_score",
    "recall_score",
    "roc_auc_score",
    "zero_one_loss",
)

_MINIMIZED = frozenset({"hamming_loss", "hinge_loss", "zero_one_loss"})


class MetricDirection(str, Enum):
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def is_metric_id(name: str) -> bool:
    return name in METRIC_IDS


def direction_of(metric: str) -> MetricDirection:
    """Optimization direction of a metric: losses go down, scores go up."""
    if metric not in METRIC_IDS:
        raise ValueError(f"unknown metric: {metric!r}")
    if metric in _MINIMIZED:
        return MetricDirection.MINIMIZE
    return MetricDirection.MAXIMIZE


def threshold_scores(scores: np.ndarray) -> np.ndarray:
    """Scores to hard labels; a score of exactly 0.5 maps to class 1."""
    return (np.asarray(scores, dtype=float) >= 0.5).astype(np.int64)


def confusion(y_true, y_pred) -> ConfusionCounts:
    """Exact confusion counts for label sequences in {0, 1}."""
    yt = np.asarray(y_true, dtype=np.int64)
    yp = np.asarray(y_pred, dtype=np.int64)
    if yt.shape != yp.shape:
        raise ValueError("y_true and y_pred must have equal length")
    if yt.size and (yt.min() < 0 or yt.max() > 1 or yp.min() < 0 or yp.max() > 1):
        raise ValueError("labels must be 0 or 1")
    tp = int(np.sum((yt == 1) & (yp == 1)))
    fp = int(np.sum((yt == 0) & (yp == 1)))
    tn = int(np.sum((yt == 0) & (yp == 0)))
    fn = int(np.sum((yt == 1) & (yp == 0)))
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def _validate(y_true, scores) -> tuple[np.ndarray, np.ndarray]:
    yt = np.asarray(y_true, dtype=np.int64)
    s = np.asarray(scores, dtype=float)
    if yt.ndim != 1 or s.ndim != 1 or yt.shape != s.shape:
        raise ValueError("y_true and scores must be 1-D sequences of equal length")
    if yt.size < 1:
        raise ValueError("need at least one scored instance")
    if np.any((yt != 0) & (yt != 1)):
        raise ValueError("y_true labels must be 0 or 1")
    if np.any(s < 0.0) or np.any(s > 1.0) or not np.all(np.isfinite(s)):
        raise ValueError("scores must lie in [0, 1]")
    return yt, s


def _auc(yt: np.ndarray, s: np.ndarray) -> float | None:
    # Mann-Whitney statistic via average ranks; ties get 0.5 credit.
    n_pos = int(np.sum(yt == 1))
    n_neg = yt.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    ranks = np.empty(yt.size, dtype=float)
    i = 0
    while i < yt.size:
        j = i
        while j + 1 < yt.size and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        # average 1-based rank of the tie block [i, j]
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum_pos = float(np.sum(ranks[yt == 1]))
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def compute_metric(metric: str, y_true, scores) -> float | None:
    """Evaluate one metric over scored instances.

    Returns ``None`` when the metric is undefined for the given inputs
    (vanishing denominator), never a substituted value.
    """
    if metric not in METRIC_IDS:
        raise ValueError(f"unknown metric: {metric!r}")
    yt, s = _validate(y_true, scores)
    n = yt.size

    if metric == "roc_auc_score":
        return _auc(yt, s)

    if metric == "hinge_loss":
        margins = 2.0 * s - 1.0
        y_signed = 2.0 * yt - 1.0
        return float(np.mean(np.maximum(0.0, 1.0 - y_signed * margins)))

    yp = threshold_scores(s)
    c = confusion(yt, yp)
    tp, fp, tn, fn = c.tp, c.fp, c.tn, c.fn

    if metric == "accuracy_score":
        return (tp + tn) / n
    if metric == "zero_one_loss":
        return 1.0 - (tp + tn) / n
    if metric == "hamming_loss":
        # binary single-label: identical to the zero-one loss
        return 1.0 - (tp + tn) / n
    if metric == "precision_score":
        return tp / (tp + fp) if (tp + fp) > 0 else None
    if metric == "recall_score":
        return tp / (tp + fn) if (tp + fn) > 0 else None
    if metric == "f1_score":
        denom = 2 * tp + fp + fn
        return 2 * tp / denom if denom > 0 else None
    if metric == "jaccard_score":
        denom = tp + fp + fn
        return tp / denom if denom > 0 else None
    if metric == "cohen_kappa_score":
        p_o = (tp + tn) / n
        p_e = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (n * n)
        if p_e == 1.0:
            return None
        return (p_o - p_e) / (1.0 - p_e)
    if metric == "matthews_corrcoef":
        denom = math.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
        if denom == 0.0:
            return None
        return (tp * tn - fp * fn) / denom
    raise AssertionError(f"unhandled metric {metric}")
