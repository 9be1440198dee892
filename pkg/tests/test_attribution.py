import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lava.attribution import (
    SCENARIO_LABELS,
    AttributionConfig,
    AttributionLabel,
    attribute,
    candidate_frames,
)
from lava.core import FrameLabels, Modality, ScoreSequence, VideoMeta, VideoRecord
from lava.fusion import GateDecision

G0, G1 = GateDecision(0, 0.05), GateDecision(1, 0.6)


def segment_record(v_level, a_level, base=0.02, T=60, seg=slice(20, 32)):
    v = np.full(T, base)
    a = np.full(T, base)
    v[seg] = v_level
    a[seg] = a_level
    y = np.zeros(T, int)
    y[seg] = 1
    return VideoRecord(
        "r",
        VideoMeta(T, 25.0, T * 640, 16000.0),
        ScoreSequence(Modality.VISUAL, v),
        ScoreSequence(Modality.AUDIO, a),
        FrameLabels(y),
    )


def fused_probs(rec):
    return (rec.labels.values * 0.9 + 0.05).astype(float)


def test_survival_patterns():
    rec = segment_record(0.9, 0.1)
    assert attribute(rec, G0, probs=fused_probs(rec)).label is AttributionLabel.FACE_SWAP
    rec = segment_record(0.9, 0.9)
    v = attribute(rec, G0, probs=fused_probs(rec))
    assert v.label is AttributionLabel.JOINT_DEEPFAKE
    assert v.visual_mean == pytest.approx(0.9) and v.audio_mean == pytest.approx(0.9)
    rec = segment_record(0.1, 0.9)
    assert attribute(rec, G0, probs=fused_probs(rec)).label is AttributionLabel.VOICE_CLONE


def test_nothing_elevated_is_authentic():
    rec = segment_record(0.05, 0.05, base=0.05)
    v = attribute(rec, G0, probs=np.full(60, 0.05))
    assert v.label is AttributionLabel.AUTHENTIC and not v.low_confidence
    assert not candidate_frames(rec, G0, np.full(60, 0.05)).any()


def test_gated_video_cannot_assert_visual_evidence():
    rec = segment_record(0.9, 0.9)
    v = attribute(rec, G1, probs=fused_probs(rec))
    assert v.label is AttributionLabel.VOICE_CLONE and v.low_confidence
    rec = segment_record(0.9, 0.1)
    v = attribute(rec, G1, probs=fused_probs(rec))
    assert v.label is AttributionLabel.INDETERMINATE and v.low_confidence


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_gate_blocks_visual_verdicts(vl, al, base):
    rec = segment_record(vl, al, base=base)
    v = attribute(rec, G1, probs=np.clip(rec.audio.values, 0, 1))
    assert v.label not in (AttributionLabel.FACE_SWAP, AttributionLabel.JOINT_DEEPFAKE)
    assert v.label is not AttributionLabel.INDETERMINATE or v.low_confidence


def test_candidates_follow_fused_detections():
    rec = segment_record(0.3, 0.3)  # neither channel crosses 0.5 by itself
    probs = np.zeros(60)
    probs[25:28] = 0.7
    mask = candidate_frames(rec, G0, probs)
    assert list(np.flatnonzero(mask)) == [25, 26, 27]


def test_min_elevated_fraction():
    rec = segment_record(0.99, 0.1)
    v = rec.visual.values.copy()
    v[0:13] = 0.45  # high-ish but not elevated
    rec = rec.replace(visual=ScoreSequence(Modality.VISUAL, v))
    probs = fused_probs(rec)
    probs[0:13] = 0.8
    # 12 of 25 candidate frames elevated: the mean (0.71) passes, the fraction (0.48) does not
    assert attribute(rec, G0, AttributionConfig(min_elevated_fraction=0.5), probs).label is AttributionLabel.AUTHENTIC
    assert attribute(rec, G0, AttributionConfig(min_elevated_fraction=0.4), probs).label is AttributionLabel.FACE_SWAP
    with pytest.raises(ValueError):
        AttributionConfig(elevation_threshold=1.0)
    with pytest.raises(ValueError):
        AttributionConfig(min_elevated_fraction=0.0)


def test_scenario_mapping_is_complete():
    assert set(SCENARIO_LABELS) == {"authentic", "visual", "audio", "joint"}
    assert AttributionLabel.INDETERMINATE not in SCENARIO_LABELS.values()
