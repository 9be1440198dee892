"""Temperature scaling fitted by minimising expected calibration error."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .core import FrameLabels

log = logging.getLogger(__name__)

ECE_TIE_TOL = 1e-12
_TINY = np.nextafter(0.0, 1.0)
_ONE_MINUS = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class CalibrationConfig:
    bin_count: int = 10
    grid_low: float = 0.01
    grid_high: float = 10.0
    grid_size: int = 300
    logit_clip_epsilon: float = 1e-6
    include_identity: bool = True

    def __post_init__(self):
        if self.bin_count < 1:
            raise ValueError("bin_count must be >= 1")
        if not 0 < self.grid_low < self.grid_high:
            raise ValueError("need 0 < grid_low < grid_high")
        if self.grid_size < 1:
            raise ValueError("grid_size must be >= 1")
        if not 0 < self.logit_clip_epsilon < 0.5:
            raise ValueError("logit_clip_epsilon must lie in (0, 0.5)")

    def candidates(self) -> np.ndarray:
        grid = np.geomspace(self.grid_low, self.grid_high, self.grid_size)
        if self.include_identity and not np.any(grid == 1.0):
            grid = np.sort(np.append(grid, 1.0))
        return grid


@dataclass(frozen=True)
class CalibrationModel:
    temperature: float
    achieved_ece: float


def _labels(labels) -> np.ndarray:
    y = labels.values if isinstance(labels, FrameLabels) else np.asarray(labels)
    return y.astype(np.float64)


def expected_calibration_error(probs, labels, bin_count: int = 10) -> float:
    """Bin-weighted |mean prob - positive rate| over equal-width bins.

    Bins are [k/B, (k+1)/B) with the last one closed at 1; empty bins are skipped.
    """
    p = np.asarray(probs, dtype=np.float64)
    y = _labels(labels)
    if p.shape != y.shape or p.size == 0:
        raise ValueError("probs and labels must be non-empty and equally long")
    edges = np.arange(bin_count + 1) / bin_count
    idx = np.clip(np.searchsorted(edges, p, side="right") - 1, 0, bin_count - 1)
    # |sum_k(p - y)| / n equals n_k/n * |mean_p_k - frac_k|
    gap = np.bincount(idx, weights=p - y, minlength=bin_count)
    return float(np.sum(np.abs(gap)) / p.size)


def _logits(scores, eps: float) -> np.ndarray:
    s = np.clip(np.asarray(scores, dtype=np.float64), eps, 1.0 - eps)
    return logit(s)


def fit_temperature(fused, labels, config: CalibrationConfig = CalibrationConfig()) -> CalibrationModel:
    """Grid-search the temperature with the lowest ECE; ties go to T nearest 1."""
    y = _labels(labels)
    ell = _logits(fused, config.logit_clip_epsilon)
    if not y.any() or y.all():
        log.warning("calibration undefined for single-class labels; using T = 1")
        return CalibrationModel(1.0, expected_calibration_error(expit(ell), y, config.bin_count))
    grid = config.candidates()
    eces = np.array([expected_calibration_error(expit(ell / t), y, config.bin_count) for t in grid])
    # every candidate within the tolerance of the minimum ties; take the one nearest 1
    tied = np.flatnonzero(eces <= eces.min() + ECE_TIE_TOL)
    best = tied[np.argmin(np.abs(grid[tied] - 1.0))]
    return CalibrationModel(float(grid[best]), float(eces[best]))


def apply_calibration(fused, model: CalibrationModel, config: CalibrationConfig = CalibrationConfig()) -> np.ndarray:
    p = expit(_logits(fused, config.logit_clip_epsilon) / model.temperature)
    # keep the open interval even where float64 saturates
    return np.clip(p, _TINY, _ONE_MINUS)
