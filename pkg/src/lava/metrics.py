"""Frame- and video-level detection metrics."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from .core import FrameLabels


class UndefinedMetricError(ValueError):
    """The metric has no value for the given labels (e.g. AP without positives)."""


def _as_labels(labels) -> np.ndarray:
    if isinstance(labels, FrameLabels):
        return labels.values.astype(np.int64)
    y = np.asarray(labels)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")
    return y.astype(np.int64)


def average_precision(scores, labels) -> float:
    """Non-interpolated AP with tied scores evaluated as one threshold.

    AP = sum_n (R_n - R_{n-1}) P_n over the distinct score thresholds,
    taken in descending order, so reordering tied frames cannot change it.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = _as_labels(labels)
    if s.shape != y.shape:
        raise ValueError(f"scores {s.shape} and labels {y.shape} differ in shape")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise UndefinedMetricError(
            f"average precision undefined: {n_pos} positives among {y.size} frames"
        )
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    tp = np.cumsum(y)
    # last index of each run of equal scores
    last = np.flatnonzero(np.append(s[1:] != s[:-1], True))
    tp = tp[last]
    precision = tp / (last + 1)
    recall = tp / n_pos
    return float(np.sum(np.diff(recall, prepend=0.0) * precision))


def temporal_iou(probs, labels, threshold: float = 0.5) -> float:
    pred = np.asarray(probs, dtype=np.float64) >= threshold
    gt = _as_labels(labels).astype(bool)
    if pred.shape != gt.shape:
        raise ValueError("probs and labels differ in length")
    union = np.count_nonzero(pred | gt)
    if union == 0:
        return 1.0
    return np.count_nonzero(pred & gt) / union


def false_positive_rate(video_probs, threshold: float = 0.5) -> float:
    """Fraction of authentic videos with at least one frame at or above threshold."""
    video_probs = list(video_probs)
    if not video_probs:
        raise ValueError("no videos given")
    authentic = flagged = 0
    for probs, labels in video_probs:
        if _as_labels(labels).any():
            continue
        authentic += 1
        flagged += bool(np.any(np.asarray(probs) >= threshold))
    if authentic == 0:
        raise UndefinedMetricError("false positive rate undefined: no authentic videos")
    return flagged / authentic


def roc_auc(scores, labels) -> float:
    """ROC AUC as the Mann-Whitney statistic (ties count one half)."""
    s = np.asarray(scores, dtype=np.float64)
    y = _as_labels(labels).astype(bool)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC AUC needs both classes")
    ranks = rankdata(s)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def video_auc(video_probs) -> float:
    """Video-level AUC with each video scored by its maximum frame probability."""
    scores, labels = [], []
    for probs, y in video_probs:
        scores.append(float(np.max(probs)))
        labels.append(int(_as_labels(y).any()))
    return roc_auc(scores, labels)
