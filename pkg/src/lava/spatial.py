"""Pixel-level localisation metrics with optional morphological refinement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import TamperMap


@dataclass(frozen=True)
class SpatialReport:
    iou: float
    recall: float
    f1: float
    refined: bool
    precision: float = 0.0


def morphological_close(mask, radius: int = 2) -> np.ndarray:
    """Binary closing with a (2r+1)x(2r+1) square.

    The mask is zero-padded by ``radius`` first so that the image border does
    not erode objects touching it; the result always contains the input.
    """
    m = np.asarray(mask).astype(bool)
    if m.ndim != 2:
        raise ValueError("mask must be 2-d")
    if radius < 1:
        raise ValueError("radius must be a positive integer")
    r = int(radius)
    se = np.ones((2 * r + 1, 2 * r + 1), dtype=bool)
    padded = np.pad(m, r)
    closed = ndimage.binary_erosion(ndimage.binary_dilation(padded, se), se, border_value=0)
    return closed[r:-r, r:-r]


def _ratio(num, den) -> float:
    return num / den if den else 0.0


def mask_scores(pred, gt) -> tuple[float, float, float, float]:
    """(iou, precision, recall, f1) of two boolean masks; 0/0 counts as 0."""
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    tp = np.count_nonzero(pred & gt)
    fp = np.count_nonzero(pred & ~gt)
    fn = np.count_nonzero(~pred & gt)
    iou = _ratio(tp, tp + fp + fn)
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return iou, precision, recall, f1


def spatial_metrics(pred_map, gt_mask, binarize_threshold: float = 0.5, refine: bool = False, radius: int = 2) -> SpatialReport:
    pred = pred_map.as_array() if isinstance(pred_map, TamperMap) else np.asarray(pred_map, dtype=np.float64)
    gt = np.asarray(gt_mask).astype(bool)
    if pred.shape != gt.shape:
        raise ValueError(f"prediction {pred.shape} and ground truth {gt.shape} differ in shape")
    binary = pred >= binarize_threshold
    if refine:
        binary = morphological_close(binary, radius)
    iou, precision, recall, f1 = mask_scores(binary, gt)
    return SpatialReport(iou, recall, f1, refine, precision)
