"""Reliability gate, offset-bank alignment and confidence-weighted fusion."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .alignment import offset_to_frames, shift_scores
from .core import FrameLabels, ScoreSequence, VideoMeta, VideoRecord
from .metrics import UndefinedMetricError, average_precision

log = logging.getLogger(__name__)

DEFAULT_OFFSETS = (-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0)
TIE_TOL = 1e-12


class OffsetMeasure(str, enum.Enum):
    ORACLE_AP = "oracle-ap"
    CROSS_CORRELATION = "cross-correlation"


class Combine(str, enum.Enum):
    CONFIDENCE = "confidence"
    MEAN = "mean"  # fixed 0.5/0.5 weights


@dataclass(frozen=True)
class GateConfig:
    tau: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")


@dataclass(frozen=True)
class GateDecision:
    g: int
    visual_mean: float


@dataclass(frozen=True)
class OffsetBank:
    offsets_seconds: tuple = DEFAULT_OFFSETS

    def __post_init__(self):
        offs = tuple(float(o) for o in self.offsets_seconds)
        if 0.0 not in offs:
            raise ValueError("offset bank must contain 0")
        if list(offs) != sorted(offs):
            raise ValueError("offset bank must be sorted ascending")
        object.__setattr__(self, "offsets_seconds", offs)

    def search_order(self) -> list:
        """Candidates by increasing |delta|, negative first on equal magnitude."""
        return sorted(self.offsets_seconds, key=lambda d: (abs(d), d))


@dataclass(frozen=True)
class ConfidenceConfig:
    half_window: int = 3

    def __post_init__(self):
        if int(self.half_window) != self.half_window or self.half_window < 1:
            raise ValueError("half_window must be a positive integer")


@dataclass(frozen=True)
class FusionResult:
    fused: np.ndarray
    gate: GateDecision
    chosen_offset_seconds: float
    per_frame_confidence: Optional[tuple] = None  # (audio, visual) when g == 0
    maps: Optional[tuple] = None  # nulled when g == 1


def reliability_gate(visual, config: GateConfig = GateConfig()) -> GateDecision:
    """g = 1 when the mean visual score exceeds tau (global channel collapse)."""
    v = visual.values if isinstance(visual, ScoreSequence) else np.asarray(visual, dtype=np.float64)
    if v.size == 0:
        raise ValueError("empty visual sequence")
    mean = float(np.mean(v))
    return GateDecision(int(mean > config.tau), mean)


def confidence_series(values, config: ConfidenceConfig = ConfidenceConfig()) -> np.ndarray:
    """(1 - 4 var)_+ per frame, sample variance over a boundary-truncated window."""
    x = np.asarray(values, dtype=np.float64)
    W = config.half_window
    padded = np.concatenate([np.full(W, np.nan), x, np.full(W, np.nan)])
    win = np.lib.stride_tricks.sliding_window_view(padded, 2 * W + 1)
    n = np.sum(~np.isnan(win), axis=1)
    mean = np.nansum(win, axis=1) / n
    ss = np.nansum((win - mean[:, None]) ** 2, axis=1)
    var = np.where(n >= 2, ss / np.maximum(n - 1, 1), 0.0)
    return np.maximum(0.0, 1.0 - 4.0 * var)


def frame_confidence(values, t: int, config: ConfidenceConfig = ConfidenceConfig()) -> float:
    x = np.asarray(values, dtype=np.float64)
    if not 0 <= t < x.size:
        raise IndexError(f"frame {t} outside 0..{x.size - 1}")
    W = config.half_window
    window = x[max(0, t - W) : t + W + 1]
    var = float(np.var(window, ddof=1)) if window.size >= 2 else 0.0
    return max(0.0, 1.0 - 4.0 * var)


def fuse_frames(audio_shifted, visual, config: ConfidenceConfig = ConfidenceConfig(), *, confidences=None) -> np.ndarray:
    """Confidence-weighted per-frame combination; plain mean where both weights vanish."""
    a = np.asarray(audio_shifted, dtype=np.float64)
    v = np.asarray(visual, dtype=np.float64)
    if a.shape != v.shape:
        raise ValueError("audio and visual sequences differ in length")
    if confidences is None:
        ca, cv = confidence_series(a, config), confidence_series(v, config)
    else:
        ca, cv = (np.asarray(c, dtype=np.float64) for c in confidences)
    denom = ca + cv
    safe = np.where(denom > 0, denom, 1.0)
    return np.where(denom > 0, (ca * a + cv * v) / safe, 0.5 * (a + v))


def _values(x) -> np.ndarray:
    return x.values if hasattr(x, "values") else np.asarray(x, dtype=np.float64)


def _candidate(audio_shifted, visual, g, combine, conf_cfg):
    if g == 1:
        return audio_shifted
    if combine is Combine.MEAN:
        return 0.5 * (audio_shifted + visual)
    return fuse_frames(audio_shifted, visual, conf_cfg)


def _pearson(a, b) -> float:
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt(np.dot(a, a) * np.dot(b, b))
    if denom == 0:
        return -np.inf
    return float(np.dot(a, b) / denom)


def select_offset(
    audio,
    visual,
    labels,
    gate: GateDecision,
    bank: OffsetBank = OffsetBank(),
    meta: Optional[VideoMeta] = None,
    measure: OffsetMeasure = OffsetMeasure.ORACLE_AP,
    conf_cfg: ConfidenceConfig = ConfidenceConfig(),
    combine: Combine = Combine.CONFIDENCE,
    frame_rate: Optional[float] = None,
):
    """Pick the bank offset whose fused sequence maximises the selection measure.

    Returns ``(delta_star_seconds, fused)``. Ties go to the smallest |delta|,
    then to the negative offset.
    """
    a, v = _values(audio), _values(visual)
    if a.shape != v.shape:
        raise ValueError("audio and visual sequences differ in length")
    f = frame_rate if frame_rate is not None else meta.frame_rate
    measure = OffsetMeasure(measure)
    combine = Combine(combine)
    y = None if labels is None else _values(labels)

    def fused_at(delta):
        shifted = shift_scores(a, offset_to_frames(delta, f))
        return _candidate(shifted, v, gate.g, combine, conf_cfg)

    if measure is OffsetMeasure.ORACLE_AP:
        if y is None or not y.any() or y.all():
            log.debug("offset search skipped: AP undefined for constant labels")
            return 0.0, fused_at(0.0)
        score = lambda delta, fused: average_precision(fused, y)
    else:
        if gate.g == 1:
            # the gated visual track is no alignment reference
            return 0.0, fused_at(0.0)
        score = lambda delta, fused: _pearson(shift_scores(a, offset_to_frames(delta, f)), v)

    best_delta, best_j, best_fused = None, -np.inf, None
    for delta in bank.search_order():
        fused = fused_at(delta)
        j = score(delta, fused)
        if best_delta is None or j > best_j + TIE_TOL:
            best_delta, best_j, best_fused = delta, j, fused
    return best_delta, best_fused


def run_fusion(
    record: VideoRecord,
    gate_cfg: GateConfig = GateConfig(),
    bank: OffsetBank = OffsetBank(),
    conf_cfg: ConfidenceConfig = ConfidenceConfig(),
    measure: OffsetMeasure = OffsetMeasure.ORACLE_AP,
    *,
    use_gate: bool = True,
    combine: Combine = Combine.CONFIDENCE,
) -> FusionResult:
    """Gate, align and fuse one (already stretch-corrected) record."""
    gate = reliability_gate(record.visual, gate_cfg)
    effective = gate if use_gate else GateDecision(0, gate.visual_mean)
    delta, fused = select_offset(
        record.audio,
        record.visual,
        record.labels,
        effective,
        bank,
        record.meta,
        measure,
        conf_cfg,
        combine,
    )
    conf = None
    if effective.g == 0 and Combine(combine) is Combine.CONFIDENCE:
        shifted = shift_scores(record.audio.values, offset_to_frames(delta, record.meta.frame_rate))
        conf = (confidence_series(shifted, conf_cfg), confidence_series(record.visual.values, conf_cfg))
    maps = record.maps if effective.g == 0 else None
    fused = np.clip(fused, 0.0, 1.0)
    fused.setflags(write=False)
    return FusionResult(fused, gate, delta, conf, maps)
