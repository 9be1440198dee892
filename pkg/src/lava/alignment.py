"""Temporal stretch estimation/correction and the audio offset shift."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ScoreSequence, VideoMeta, VideoRecord

STRETCH_DEAD_ZONE = 0.01


def round_half_away(x: float) -> int:
    """Round to nearest integer, halves away from zero (12.5 -> 13, -12.5 -> -13)."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def offset_to_frames(delta_seconds: float, frame_rate: float) -> int:
    return round_half_away(delta_seconds * frame_rate)


@dataclass(frozen=True)
class StretchEstimate:
    alpha_hat: float
    triggered: bool


def estimate_stretch(meta: VideoMeta, dead_zone: float = STRETCH_DEAD_ZONE) -> StretchEstimate:
    """Observed audio/video duration ratio; correction triggers outside the dead zone."""
    video_duration = meta.nominal_duration
    if video_duration <= 0:
        raise ValueError("zero nominal duration")
    alpha_hat = meta.audio_duration / video_duration
    if not alpha_hat > 0:
        raise ValueError(f"cannot estimate stretch from empty audio track (N={meta.audio_sample_count})")
    return StretchEstimate(alpha_hat, abs(alpha_hat - 1.0) > dead_zone)


def resample(values, ratio: float, phase: float = 0.0) -> np.ndarray:
    """Linear-interpolation resampling that reads the input every ``ratio`` samples.

    Output sample ``i`` reads position ``i * ratio + phase``. Output length is
    ``round(len / ratio)``; positions past either end hold the end value.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("resample needs a non-empty 1-d input")
    if not ratio > 0:
        raise ValueError(f"ratio must be > 0, got {ratio}")
    n_out = max(1, round_half_away(x.size / ratio))
    pos = np.arange(n_out) * ratio + phase
    # np.interp clamps beyond the last sample to x[-1]
    return np.interp(pos, np.arange(x.size), x)


def shift_scores(values, delta_frames: int) -> np.ndarray:
    """out[t] = in[clamp(t - delta_frames)]; edges repeat the nearest valid score."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot shift an empty sequence")
    idx = np.clip(np.arange(x.size) - int(delta_frames), 0, x.size - 1)
    return x[idx]


def _fit_length(x: np.ndarray, n: int) -> np.ndarray:
    if x.size >= n:
        return x[:n]
    return np.concatenate([x, np.full(n - x.size, x[-1])])


def correct_stretch(record: VideoRecord, dead_zone: float = STRETCH_DEAD_ZONE) -> VideoRecord:
    """Undo an observed audio stretch on the audio score track.

    Original frame ``i`` occupies stretched frames ``[i, i + 1) * alpha_hat``;
    reading the stretched track at the centre of that span restores frame order
    without the half-frame lag of the floor remapping.
    """
    est = estimate_stretch(record.meta, dead_zone)
    if not est.triggered:
        return record
    a = est.alpha_hat
    restored = _fit_length(resample(record.audio.values, a, phase=0.5 * a), record.meta.frame_count)
    restored = np.clip(restored, 0.0, 1.0)
    meta = VideoMeta(
        record.meta.frame_count,
        record.meta.frame_rate,
        round_half_away(record.meta.audio_sample_count / est.alpha_hat),
        record.meta.audio_sample_rate,
    )
    return record.replace(meta=meta, audio=ScoreSequence(record.audio.modality, restored))
