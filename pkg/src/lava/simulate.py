"""Synthetic score benchmarks, score-level deployment distortions, and the
map/sample-vector aggregation used by external detector adapters.
"""

from __future__ import annotations

import enum
import zlib
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .alignment import offset_to_frames, round_half_away, shift_scores
from .core import (
    FrameLabels,
    Modality,
    ScoreSequence,
    TamperInterval,
    TamperMap,
    VideoMeta,
    VideoRecord,
    intervals_to_labels,
)


class Scenario(str, enum.Enum):
    AUTHENTIC = "authentic"
    VISUAL = "visual"  # face swap
    AUDIO = "audio"  # voice clone
    JOINT = "joint"

    @property
    def visual_tampered(self) -> bool:
        return self in (Scenario.VISUAL, Scenario.JOINT)

    @property
    def audio_tampered(self) -> bool:
        return self in (Scenario.AUDIO, Scenario.JOINT)


TAMPERED_SCENARIOS = (Scenario.VISUAL, Scenario.AUDIO, Scenario.JOINT)


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    video_count: int = 500
    frames_per_video: int = 300
    frame_rate: float = 25.0
    audio_sample_rate: float = 16000.0
    tamper_fraction_range: tuple = (0.03, 0.07)
    authentic_video_fraction: float = 0.2
    authentic_score_mean: float = 0.01
    tampered_score_mean: float = 0.95
    score_noise_std: float = 0.01
    # relative weights of (visual-only, audio-only, joint) among tampered videos
    scenario_weights: tuple = (1.0, 1.0, 1.0)
    # tampered frames are kept out of the first/last edge_margin_fraction of the clip
    edge_margin_fraction: float = 0.15

    def __post_init__(self):
        lo, hi = self.tamper_fraction_range
        object.__setattr__(self, "tamper_fraction_range", (float(lo), float(hi)))
        object.__setattr__(self, "scenario_weights", tuple(float(w) for w in self.scenario_weights))
        if self.video_count < 1 or self.frames_per_video < 1:
            raise ValueError("video_count and frames_per_video must be positive")
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError(f"tamper_fraction_range must satisfy 0 <= low <= high <= 1, got {(lo, hi)}")
        if not 0.0 <= self.authentic_video_fraction <= 1.0:
            raise ValueError("authentic_video_fraction must lie in [0, 1]")
        for name in ("authentic_score_mean", "tampered_score_mean"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.score_noise_std < 0:
            raise ValueError("score_noise_std must be >= 0")
        if len(self.scenario_weights) != 3 or min(self.scenario_weights) < 0 or sum(self.scenario_weights) <= 0:
            raise ValueError("scenario_weights needs three nonnegative weights with a positive sum")
        if not 0.0 <= self.edge_margin_fraction < 0.5:
            raise ValueError("edge_margin_fraction must lie in [0, 0.5)")
        if self.authentic_video_fraction < 1.0:
            if hi * self.frames_per_video < 1.0:
                raise ValueError(
                    f"tamper_fraction_range {self.tamper_fraction_range} gives < 1 tampered frame "
                    f"at {self.frames_per_video} frames per video"
                )
            usable = self.frames_per_video - 2 * int(self.edge_margin_fraction * self.frames_per_video)
            if self._max_tampered_frames() > usable:
                raise ValueError("tampered frames do not fit inside the edge margins")

    def _max_tampered_frames(self) -> int:
        return max(1, round_half_away(self.tamper_fraction_range[1] * self.frames_per_video))


# Named compression conditions mapped onto simulator severities.
SEVERITY_PRESETS = {
    "jpeg-q23": 0.85,
    "h264-crf23": 0.90,
    "h264-crf28": 0.95,
}

# Named low-bitrate audio conditions mapped onto additive score noise.
AUDIO_NOISE_PRESETS = {
    "mp3-128k": 0.02,
    "mp3-32k": 0.12,
}


@dataclass(frozen=True)
class Stretch:
    factor: float

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError(f"stretch factor must be > 0, got {self.factor}")


@dataclass(frozen=True)
class CompressionCollapse:
    severity: float
    noise_std: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.severity <= 1.0:
            raise ValueError(f"severity must lie in [0, 1], got {self.severity}")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")

    @classmethod
    def preset(cls, name: str, **kw) -> "CompressionCollapse":
        return cls(SEVERITY_PRESETS[name], **kw)


@dataclass(frozen=True)
class AvOffset:
    delta_seconds: float


@dataclass(frozen=True)
class AudioNoise:
    """Low-bitrate audio transcoding: clipped additive noise on audio scores."""

    std: float
    seed: int = 0

    def __post_init__(self):
        if self.std < 0:
            raise ValueError("std must be >= 0")

    @classmethod
    def preset(cls, name: str, **kw) -> "AudioNoise":
        return cls(AUDIO_NOISE_PRESETS[name], **kw)


Distortion = Union[Stretch, CompressionCollapse, AvOffset, AudioNoise]


def _clipped_normal(rng, mean, std, size):
    if std == 0:
        return np.full(size, float(mean))
    return np.clip(rng.normal(mean, std, size), 0.0, 1.0)


def _place_intervals(rng, config: GenConfig) -> list[TamperInterval]:
    T = config.frames_per_video
    lo, hi = config.tamper_fraction_range
    n_tampered = round_half_away(rng.uniform(lo, hi) * T)
    n_tampered = min(max(n_tampered, 1), config._max_tampered_frames())
    k = 1 if n_tampered < 2 else int(rng.integers(1, 3))
    if k == 1:
        lengths = [n_tampered]
    else:
        first = int(rng.integers(1, n_tampered))
        lengths = [first, n_tampered - first]
    margin = int(config.edge_margin_fraction * T)
    usable = T - 2 * margin
    # at least one untampered frame between intervals so they stay separate runs
    slack = usable - n_tampered - (k - 1)
    if slack < 0:
        lengths, k, slack = [n_tampered], 1, usable - n_tampered
    cuts = np.sort(rng.integers(0, slack + 1, size=k))
    intervals = []
    pos = margin
    prev_cut = 0
    for i, (length, cut) in enumerate(zip(lengths, cuts)):
        pos += int(cut - prev_cut) + (1 if i > 0 else 0)
        intervals.append(TamperInterval(pos, pos + length))
        pos += length
        prev_cut = int(cut)
    return intervals


def _channel_scores(rng, config: GenConfig, labels: np.ndarray, tampered: bool) -> np.ndarray:
    T = labels.size
    scores = _clipped_normal(rng, config.authentic_score_mean, config.score_noise_std, T)
    if tampered:
        hot = _clipped_normal(rng, config.tampered_score_mean, config.score_noise_std, T)
        scores = np.where(labels == 1, hot, scores)
    return scores


def generate_video(config: GenConfig, index: int) -> tuple[VideoRecord, Scenario]:
    """Generate one video from its own RNG stream derived from (seed, index)."""
    rng = np.random.default_rng([config.seed, index])
    T = config.frames_per_video
    if rng.uniform() < config.authentic_video_fraction:
        scenario = Scenario.AUTHENTIC
        labels = np.zeros(T, dtype=np.int8)
    else:
        w = np.asarray(config.scenario_weights)
        scenario = TAMPERED_SCENARIOS[int(rng.choice(3, p=w / w.sum()))]
        labels = intervals_to_labels(_place_intervals(rng, config), T).values
    visual = _channel_scores(rng, config, labels, scenario.visual_tampered)
    audio = _channel_scores(rng, config, labels, scenario.audio_tampered)
    meta = VideoMeta(
        T,
        config.frame_rate,
        round_half_away(T / config.frame_rate * config.audio_sample_rate),
        config.audio_sample_rate,
    )
    record = VideoRecord(
        id=f"v{index:05d}",
        meta=meta,
        visual=ScoreSequence(Modality.VISUAL, visual),
        audio=ScoreSequence(Modality.AUDIO, audio),
        labels=FrameLabels(labels),
    )
    return record, scenario


def generate_benchmark_with_scenarios(config: GenConfig) -> list[tuple[VideoRecord, Scenario]]:
    return [generate_video(config, i) for i in range(config.video_count)]


def generate_benchmark(config: GenConfig) -> list[VideoRecord]:
    return [rec for rec, _ in generate_benchmark_with_scenarios(config)]


def aggregate_visual(tamper_map: TamperMap) -> float:
    """Frame score as the spatial mean of the pixel tamper map."""
    return float(np.mean(tamper_map.values))


def audio_frame_indices(meta: VideoMeta, frame_index: int) -> np.ndarray:
    """Sample indices n with (t-1)/f <= n/f_s < t/f for 1-based frame t."""
    t = frame_index
    f, fs = meta.frame_rate, meta.audio_sample_rate
    # smallest n with n >= (t-1) fs / f, smallest n with n >= t fs / f
    lo = int(np.ceil((t - 1) * fs / f - 1e-9))
    hi = int(np.ceil(t * fs / f - 1e-9))
    lo, hi = max(lo, 0), min(hi, meta.audio_sample_count)
    return np.arange(lo, hi) if hi > lo else np.arange(0)


def aggregate_audio(samples, meta: VideoMeta, frame_index: int) -> float:
    """Audio integrity score of a 1-based frame: 1 - mean presence over its samples.

    Frames that own no audio samples get the uninformative score 0.5.
    """
    if not 1 <= frame_index <= meta.frame_count:
        raise ValueError(f"frame_index {frame_index} outside 1..{meta.frame_count}")
    d = np.asarray(samples, dtype=np.float64)
    if d.size and (d.min() < 0.0 or d.max() > 1.0):
        raise ValueError("sample presence values must lie in [0, 1]")
    idx = audio_frame_indices(meta, frame_index)
    idx = idx[idx < d.size]
    if idx.size == 0:
        return 0.5
    return float(1.0 - d[idx].mean())


def _noise_rng(record_id: str, seed: int, salt: int) -> np.random.Generator:
    return np.random.default_rng([seed, salt, zlib.crc32(record_id.encode("utf-8"))])


def compression_noise(record_id: str, d: CompressionCollapse, n: int) -> np.ndarray:
    """Per-frame eps_t >= 0 of the collapse target 1 - eps_t (fixed per record and seed)."""
    if d.noise_std == 0:
        return np.zeros(n)
    rng = _noise_rng(record_id, d.seed, 1)
    return np.minimum(np.abs(rng.normal(0.0, d.noise_std, n)), 1.0)


def apply_distortion(record: VideoRecord, d: Distortion) -> VideoRecord:
    """Apply one deployment distortion at the score level. Labels never change."""
    T = record.meta.frame_count
    if isinstance(d, Stretch):
        src = np.clip(np.floor(d.factor * np.arange(T)).astype(np.int64), 0, T - 1)
        audio = record.audio.values[src]
        meta = VideoMeta(
            T,
            record.meta.frame_rate,
            round_half_away(record.meta.audio_sample_count / d.factor),
            record.meta.audio_sample_rate,
        )
        return record.replace(meta=meta, audio=ScoreSequence(Modality.AUDIO, audio))
    if isinstance(d, CompressionCollapse):
        s = record.visual.values
        target = 1.0 - compression_noise(record.id, d, T)
        visual = np.clip((1.0 - d.severity) * s + d.severity * target, 0.0, 1.0)
        return record.replace(visual=ScoreSequence(Modality.VISUAL, visual))
    if isinstance(d, AvOffset):
        k = offset_to_frames(d.delta_seconds, record.meta.frame_rate)
        if k == 0:
            return record
        # audio ends up leading the video by k frames; the +delta bank entry undoes it
        audio = shift_scores(record.audio.values, -k)
        return record.replace(audio=ScoreSequence(Modality.AUDIO, audio))
    if isinstance(d, AudioNoise):
        rng = _noise_rng(record.id, d.seed, 2)
        audio = np.clip(record.audio.values + rng.normal(0.0, d.std, T), 0.0, 1.0) if d.std > 0 else record.audio.values
        return record.replace(audio=ScoreSequence(Modality.AUDIO, audio))
    raise TypeError(f"unknown distortion {d!r}")


def apply_distortions(record: VideoRecord, distortions) -> VideoRecord:
    for d in distortions:
        record = apply_distortion(record, d)
    return record
