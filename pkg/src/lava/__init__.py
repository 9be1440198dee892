"""Layered fusion of audio and visual watermark integrity scores for
deepfake detection, temporal localization and attribution."""

from .core import FrameLabels, Modality, ScoreSequence, TamperInterval, TamperMap, VideoMeta, VideoRecord
from .pipeline import EvalReport, PipelineConfig, Variant, run_condition
from .simulate import GenConfig, generate_benchmark

__version__ = "0.1.0"

__all__ = [
    "EvalReport",
    "FrameLabels",
    "GenConfig",
    "Modality",
    "PipelineConfig",
    "ScoreSequence",
    "TamperInterval",
    "TamperMap",
    "Variant",
    "VideoMeta",
    "VideoRecord",
    "generate_benchmark",
    "run_condition",
]
