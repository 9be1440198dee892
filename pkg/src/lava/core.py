"""Shared domain types: metadata, score sequences, labels, intervals and maps.

Every container is a frozen dataclass holding read-only float64 / int8
arrays, so records can be passed between worker threads without copying.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DURATION_TOL = 1e-9


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class Modality(str, enum.Enum):
    VISUAL = "visual"
    AUDIO = "audio"


@dataclass(frozen=True)
class VideoMeta:
    frame_count: int
    frame_rate: float
    audio_sample_count: int
    audio_sample_rate: float

    def __post_init__(self):
        if int(self.frame_count) != self.frame_count or self.frame_count < 1:
            raise ValueError(f"frame_count must be a positive integer, got {self.frame_count}")
        if not self.frame_rate > 0:
            raise ValueError(f"frame_rate must be > 0, got {self.frame_rate}")
        if int(self.audio_sample_count) != self.audio_sample_count or self.audio_sample_count < 0:
            raise ValueError(f"audio_sample_count must be a nonnegative integer, got {self.audio_sample_count}")
        if not self.audio_sample_rate > 0:
            raise ValueError(f"audio_sample_rate must be > 0, got {self.audio_sample_rate}")
        object.__setattr__(self, "frame_count", int(self.frame_count))
        object.__setattr__(self, "audio_sample_count", int(self.audio_sample_count))
        object.__setattr__(self, "frame_rate", float(self.frame_rate))
        object.__setattr__(self, "audio_sample_rate", float(self.audio_sample_rate))

    @property
    def nominal_duration(self) -> float:
        """Video duration in seconds, T / f."""
        return self.frame_count / self.frame_rate

    @property
    def audio_duration(self) -> float:
        return self.audio_sample_count / self.audio_sample_rate


@dataclass(frozen=True)
class ScoreSequence:
    """Per-frame integrity scores under tamper polarity (high = tampered)."""

    modality: Modality
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "modality", Modality(self.modality))
        vals = _frozen(self.values, np.float64)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("score sequence must be a non-empty 1-d array")
        if not np.all(np.isfinite(vals)) or vals.min() < 0.0 or vals.max() > 1.0:
            bad = int(np.flatnonzero(~((vals >= 0.0) & (vals <= 1.0)))[0])
            raise ValueError(f"{self.modality.value} score at frame {bad} outside [0, 1]: {vals[bad]!r}")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, ScoreSequence):
            return NotImplemented
        return self.modality == other.modality and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True)
class FrameLabels:
    """Ground-truth tamper labels y_t (1 = tampered)."""

    values: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.values)
        if raw.ndim != 1 or raw.size == 0:
            raise ValueError("labels must be a non-empty 1-d array")
        if not np.all((raw == 0) | (raw == 1)):
            raise ValueError("labels must be 0/1")
        object.__setattr__(self, "values", _frozen(raw, np.int8))

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, FrameLabels):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None

    @property
    def is_authentic(self) -> bool:
        return not self.values.any()


@dataclass(frozen=True, order=True)
class TamperInterval:
    """Half-open frame range [start_frame, end_frame)."""

    start_frame: int
    end_frame: int

    def __post_init__(self):
        if not 0 <= self.start_frame < self.end_frame:
            raise ValueError(f"invalid interval [{self.start_frame}, {self.end_frame})")

    def __len__(self):
        return self.end_frame - self.start_frame


@dataclass(frozen=True)
class TamperMap:
    """Pixel-level tamper likelihood, row-major, values in [0, 1]."""

    height: int
    width: int
    values: np.ndarray

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("map dimensions must be positive")
        vals = _frozen(self.values, np.float64).reshape(-1)
        if vals.size != self.height * self.width:
            raise ValueError(f"map has {vals.size} values, expected {self.height * self.width}")
        if vals.min() < 0.0 or vals.max() > 1.0:
            raise ValueError("map values must lie in [0, 1]")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_array(cls, arr) -> "TamperMap":
        arr = np.asarray(arr, dtype=np.float64)
        return cls(arr.shape[0], arr.shape[1], arr.reshape(-1))

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.height, self.width)

    def __eq__(self, other):
        if not isinstance(other, TamperMap):
            return NotImplemented
        return (self.height, self.width) == (other.height, other.width) and np.array_equal(
            self.values, other.values
        )

    __hash__ = None


@dataclass(frozen=True)
class VideoRecord:
    id: str
    meta: VideoMeta
    visual: ScoreSequence
    audio: ScoreSequence
    labels: FrameLabels
    maps: Optional[tuple] = field(default=None)

    def __post_init__(self):
        T = self.meta.frame_count
        if self.visual.modality is not Modality.VISUAL:
            raise ValueError("visual sequence has the wrong modality")
        if self.audio.modality is not Modality.AUDIO:
            raise ValueError("audio sequence has the wrong modality")
        for name, n in (("visual", len(self.visual)), ("audio", len(self.audio)), ("labels", len(self.labels))):
            if n != T:
                raise ValueError(f"record {self.id}: {name} length {n} != frame_count {T}")
        if self.maps is not None:
            maps = tuple(self.maps)
            if len(maps) != T:
                raise ValueError(f"record {self.id}: {len(maps)} tamper maps for {T} frames")
            object.__setattr__(self, "maps", maps)

    def replace(self, **changes) -> "VideoRecord":
        from dataclasses import replace

        return replace(self, **changes)


def labels_to_intervals(labels: FrameLabels) -> list[TamperInterval]:
    """Decompose labels into maximal sorted runs of ones."""
    y = np.asarray(labels.values if isinstance(labels, FrameLabels) else labels, dtype=np.int8)
    padded = np.concatenate(([0], y, [0]))
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return [TamperInterval(int(s), int(e)) for s, e in zip(starts, ends)]


def intervals_to_labels(intervals: Sequence[TamperInterval], frame_count: int) -> FrameLabels:
    y = np.zeros(frame_count, dtype=np.int8)
    for iv in sorted(intervals):
        if iv.end_frame > frame_count:
            raise ValueError(f"interval [{iv.start_frame}, {iv.end_frame}) exceeds frame_count {frame_count}")
        if y[iv.start_frame : iv.end_frame].any():
            raise ValueError(f"interval [{iv.start_frame}, {iv.end_frame}) overlaps another interval")
        y[iv.start_frame : iv.end_frame] = 1
    return FrameLabels(y)
