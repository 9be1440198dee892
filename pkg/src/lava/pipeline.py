"""Four-stage pipeline (stretch -> gate -> offset/fusion -> calibration),
baseline variants, and per-condition evaluation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .alignment import correct_stretch
from .attribution import AttributionConfig, AttributionVerdict, attribute
from .calibration import (
    CalibrationConfig,
    CalibrationModel,
    apply_calibration,
    expected_calibration_error,
    fit_temperature,
)
from .core import VideoRecord
from .fusion import (
    Combine,
    ConfidenceConfig,
    GateConfig,
    GateDecision,
    OffsetBank,
    OffsetMeasure,
    reliability_gate,
    run_fusion,
)
from .metrics import (
    UndefinedMetricError,
    average_precision,
    false_positive_rate,
    temporal_iou,
    video_auc,
)
from .simulate import apply_distortions

STAGE_ORDER = ("stretch", "gate", "fusion", "calibration")


class Variant(str, enum.Enum):
    LAVA = "lava"
    NAIVE = "naive"
    VISUAL_ONLY = "visual-only"
    AUDIO_ONLY = "audio-only"
    OFFSET_ONLY = "offset-only"
    OFFSET_PLUS_GATE = "offset-plus-gate"

    @property
    def stages(self) -> tuple:
        return {
            Variant.LAVA: STAGE_ORDER,
            Variant.NAIVE: (),
            Variant.VISUAL_ONLY: (),
            Variant.AUDIO_ONLY: (),
            Variant.OFFSET_ONLY: ("stretch", "fusion"),
            Variant.OFFSET_PLUS_GATE: ("stretch", "gate", "fusion"),
        }[self]


def check_stage_order(stages: Sequence[str]) -> tuple:
    """Stages must appear in pipeline order (a subset is fine)."""
    stages = tuple(stages)
    unknown = [s for s in stages if s not in STAGE_ORDER]
    if unknown:
        raise ValueError(f"unknown pipeline stage(s): {unknown}")
    positions = [STAGE_ORDER.index(s) for s in stages]
    if positions != sorted(set(positions)):
        raise ValueError(f"stages {list(stages)} violate the order {list(STAGE_ORDER)}")
    return stages


@dataclass(frozen=True)
class PipelineConfig:
    gate: GateConfig = GateConfig()
    bank: OffsetBank = OffsetBank()
    confidence: ConfidenceConfig = ConfidenceConfig()
    calibration: CalibrationConfig = CalibrationConfig()
    attribution: AttributionConfig = AttributionConfig()
    measure: OffsetMeasure = OffsetMeasure.ORACLE_AP
    decision_threshold: float = 0.5
    validation_fraction: float = 0.3
    split_seed: int = 0
    # fit the temperature on the evaluated videos themselves (ablation ceilings only)
    oracle_calibration: bool = False
    # None -> variant default
    stretch_correction: Optional[bool] = None
    per_video_ap: bool = False

    def __post_init__(self):
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in (0, 1)")
        object.__setattr__(self, "measure", OffsetMeasure(self.measure))


@dataclass(frozen=True)
class VideoOutput:
    record: VideoRecord  # after distortions and (optional) stretch correction
    fused: np.ndarray
    probs: np.ndarray
    gate: GateDecision
    offset_seconds: float
    verdict: Optional[AttributionVerdict] = None


@dataclass(frozen=True)
class EvalReport:
    ap: float
    temporal_iou: float
    ece: float
    fpr: float
    condition_label: str
    variant: str = Variant.LAVA.value
    auc: float = math.nan


@dataclass
class ConditionResult:
    report: EvalReport
    outputs: list
    calibration: Optional[CalibrationModel] = None
    test_ids: tuple = ()


def fuse_video(record: VideoRecord, variant: Variant, config: PipelineConfig = PipelineConfig()):
    """Run the pre-calibration stages of one variant on one distorted record.

    Returns ``(corrected_record, fused, gate, offset_seconds)``.
    """
    variant = Variant(variant)
    stages = variant.stages
    do_stretch = "stretch" in stages if config.stretch_correction is None else config.stretch_correction
    if do_stretch:
        record = correct_stretch(record)
    gate = reliability_gate(record.visual, config.gate)
    if variant is Variant.VISUAL_ONLY:
        return record, record.visual.values, gate, 0.0
    if variant is Variant.AUDIO_ONLY:
        return record, record.audio.values, gate, 0.0
    if variant is Variant.NAIVE:
        return record, 0.5 * (record.visual.values + record.audio.values), gate, 0.0
    result = run_fusion(
        record,
        config.gate,
        config.bank,
        config.confidence,
        config.measure,
        use_gate="gate" in stages,
        combine=Combine.CONFIDENCE if variant is Variant.LAVA else Combine.MEAN,
    )
    return record, result.fused, result.gate, result.chosen_offset_seconds


def split_videos(ids: Sequence[str], validation_fraction: float, seed: int) -> tuple[list, list]:
    """Video-level validation/test split, independent of input order."""
    ids = sorted(ids)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ids))
    n_val = int(round(validation_fraction * len(ids)))
    val = sorted(ids[i] for i in perm[:n_val])
    test = sorted(ids[i] for i in perm[n_val:])
    return val, test


def _safe(fn, *args):
    try:
        return float(fn(*args))
    except UndefinedMetricError:
        return math.nan


def evaluate_arrays(fused, probs, labels, label: str, variant: str, config: PipelineConfig = PipelineConfig()) -> EvalReport:
    """Score per-video (fused, calibrated, label) arrays; AP and ECE pool frames."""
    labels = [np.asarray(getattr(y, "values", y)) for y in labels]
    fused = [np.asarray(f, dtype=np.float64) for f in fused]
    probs = [np.asarray(p, dtype=np.float64) for p in probs]
    if config.per_video_ap:
        aps = [_safe(average_precision, f, y) for f, y in zip(fused, labels)]
        aps = [a for a in aps if not math.isnan(a)]
        ap = float(np.mean(aps)) if aps else math.nan
    else:
        ap = _safe(average_precision, np.concatenate(fused), np.concatenate(labels))
    t = config.decision_threshold
    iou = float(np.mean([temporal_iou(p, y, t) for p, y in zip(probs, labels)]))
    ece = expected_calibration_error(np.concatenate(probs), np.concatenate(labels), config.calibration.bin_count)
    pairs = list(zip(probs, labels))
    fpr = _safe(false_positive_rate, pairs, t)
    auc = _safe(video_auc, pairs)
    return EvalReport(ap, iou, ece, fpr, label, variant, auc)


def evaluate_outputs(outputs, label: str, variant: str, config: PipelineConfig = PipelineConfig()) -> EvalReport:
    return evaluate_arrays(
        [o.fused for o in outputs],
        [o.probs for o in outputs],
        [o.record.labels for o in outputs],
        label,
        variant,
        config,
    )


@dataclass
class BatchResult:
    outputs: dict  # video id -> VideoOutput, every video
    calibration: Optional[CalibrationModel]
    validation_ids: tuple
    test_ids: tuple


def process_videos(
    records: Sequence[VideoRecord],
    config: PipelineConfig = PipelineConfig(),
    variant: Variant = Variant.LAVA,
    attribute_videos: bool = False,
) -> BatchResult:
    """Fuse every record, fit the temperature on the validation split, and
    calibrate all videos with it."""
    variant = Variant(variant)
    fused_by_id = {rec.id: fuse_video(rec, variant, config) for rec in records}
    if len(fused_by_id) != len(records):
        raise ValueError("duplicate video ids")
    ids = sorted(fused_by_id)
    if config.oracle_calibration:
        val_ids, test_ids = ids, ids
    else:
        val_ids, test_ids = split_videos(ids, config.validation_fraction, config.split_seed)

    model = None
    if "calibration" in variant.stages:
        fused_val = np.concatenate([fused_by_id[i][1] for i in val_ids])
        labels_val = np.concatenate([fused_by_id[i][0].labels.values for i in val_ids])
        model = fit_temperature(fused_val, labels_val, config.calibration)

    outputs = {}
    for vid in ids:
        record, fused, gate, delta = fused_by_id[vid]
        fused = np.asarray(fused)
        probs = apply_calibration(fused, model, config.calibration) if model is not None else fused
        verdict = attribute(record, gate, config.attribution, probs) if attribute_videos else None
        outputs[vid] = VideoOutput(record, fused, probs, gate, delta, verdict)
    return BatchResult(outputs, model, tuple(val_ids), tuple(test_ids))


def run_condition(
    benchmark: Sequence[VideoRecord],
    distortions: Sequence = (),
    config: PipelineConfig = PipelineConfig(),
    label: str = "clean",
    variant: Variant = Variant.LAVA,
    attribute_videos: bool = False,
) -> ConditionResult:
    """Distort, run one pipeline variant per video, calibrate on the validation
    split and score the test split."""
    variant = Variant(variant)
    distorted = [apply_distortions(rec, distortions) for rec in benchmark]
    batch = process_videos(distorted, config, variant, attribute_videos)
    outputs = [batch.outputs[i] for i in batch.test_ids]
    report = evaluate_outputs(outputs, label, variant.value, config)
    return ConditionResult(report, outputs, batch.calibration, batch.test_ids)
