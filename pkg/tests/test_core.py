import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lava.core import (
    FrameLabels,
    Modality,
    ScoreSequence,
    TamperInterval,
    TamperMap,
    VideoMeta,
    VideoRecord,
    intervals_to_labels,
    labels_to_intervals,
)


def iv(a, b):
    return TamperInterval(a, b)


def test_labels_to_intervals_examples():
    assert labels_to_intervals(FrameLabels([0, 0, 0, 0])) == []
    assert labels_to_intervals(FrameLabels([0, 1, 1, 0, 1])) == [iv(1, 3), iv(4, 5)]


def test_intervals_to_labels_examples():
    assert list(intervals_to_labels([], 5).values) == [0, 0, 0, 0, 0]
    assert list(intervals_to_labels([iv(0, 5)], 5).values) == [1, 1, 1, 1, 1]
    assert list(intervals_to_labels([iv(2, 3)], 4).values) == [0, 0, 1, 0]


def test_intervals_to_labels_rejects_overlap_and_range():
    with pytest.raises(ValueError, match="overlaps"):
        intervals_to_labels([iv(0, 3), iv(2, 4)], 5)
    with pytest.raises(ValueError, match="exceeds"):
        intervals_to_labels([iv(3, 6)], 5)
    with pytest.raises(ValueError):
        TamperInterval(3, 3)
    with pytest.raises(ValueError):
        TamperInterval(-1, 2)


def test_interval_round_trip_exhaustive():
    for n in range(1, 13):
        for bits in itertools.product((0, 1), repeat=n):
            labels = FrameLabels(bits)
            runs = labels_to_intervals(labels)
            assert intervals_to_labels(runs, n) == labels
            assert runs == sorted(runs)
            # maximal: neighbouring runs never touch
            assert all(a.end_frame < b.start_frame for a, b in zip(runs, runs[1:]))


@given(st.lists(st.integers(0, 1), min_size=1, max_size=200))
def test_interval_round_trip_random(bits):
    labels = FrameLabels(bits)
    assert intervals_to_labels(labels_to_intervals(labels), len(bits)) == labels


def test_score_sequence_rejects_out_of_range():
    with pytest.raises(ValueError, match="frame 2"):
        ScoreSequence(Modality.VISUAL, [0.1, 0.2, 1.5])
    with pytest.raises(ValueError):
        ScoreSequence(Modality.AUDIO, [0.1, float("nan")])
    with pytest.raises(ValueError):
        ScoreSequence(Modality.AUDIO, [-1e-9])


def test_score_sequence_is_an_immutable_copy():
    src = np.array([0.1, 0.2])
    seq = ScoreSequence("visual", src)
    src[0] = 0.9
    assert seq.values[0] == 0.1
    with pytest.raises(ValueError):
        seq.values[0] = 0.3
    assert seq.modality is Modality.VISUAL
    assert seq.values.dtype == np.float64


def test_labels_validation():
    with pytest.raises(ValueError):
        FrameLabels([0, 2])
    assert FrameLabels([0, 0]).is_authentic
    assert not FrameLabels([0, 1]).is_authentic


def test_video_meta():
    m = VideoMeta(250, 25.0, 160000, 16000.0)
    assert m.nominal_duration == pytest.approx(10.0, abs=1e-9)
    assert m.audio_duration == 10.0
    for bad in [(0, 25, 1, 1), (1, 0, 1, 1), (1, 25, -1, 1), (1, 25, 1, 0)]:
        with pytest.raises(ValueError):
            VideoMeta(*bad)


def _record(T=4, **kw):
    meta = VideoMeta(T, 25.0, T * 640, 16000.0)
    args = dict(
        id="x",
        meta=meta,
        visual=ScoreSequence(Modality.VISUAL, np.zeros(T)),
        audio=ScoreSequence(Modality.AUDIO, np.zeros(T)),
        labels=FrameLabels(np.zeros(T, dtype=int)),
    )
    args.update(kw)
    return VideoRecord(**args)


def test_video_record_consistency():
    _record()
    with pytest.raises(ValueError, match="length"):
        _record(audio=ScoreSequence(Modality.AUDIO, np.zeros(3)))
    with pytest.raises(ValueError, match="modality"):
        _record(visual=ScoreSequence(Modality.AUDIO, np.zeros(4)))
    with pytest.raises(ValueError, match="tamper maps"):
        _record(maps=[TamperMap(1, 1, [0.0])])
    rec = _record(maps=[TamperMap(1, 1, [0.0])] * 4)
    assert len(rec.maps) == 4


def test_tamper_map_round_trip():
    arr = np.array([[0.0, 0.5, 1.0], [0.25, 0.75, 0.1]])
    m = TamperMap.from_array(arr)
    assert (m.height, m.width) == (2, 3)
    np.testing.assert_array_equal(m.as_array(), arr)
    with pytest.raises(ValueError):
        TamperMap(2, 2, [0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        TamperMap(1, 1, [1.2])
