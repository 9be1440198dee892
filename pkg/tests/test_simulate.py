import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from lava.core import TamperMap, VideoMeta, labels_to_intervals
from lava.simulate import (
    AudioNoise,
    AvOffset,
    CompressionCollapse,
    GenConfig,
    Scenario,
    Stretch,
    aggregate_audio,
    aggregate_visual,
    apply_distortion,
    apply_distortions,
    compression_noise,
    generate_benchmark,
    generate_benchmark_with_scenarios,
)

SMALL = GenConfig(video_count=30, seed=7)


def test_authentic_only_video_stays_low():
    cfg = GenConfig(video_count=1, authentic_video_fraction=1.0)
    (rec,) = generate_benchmark(cfg)
    assert not rec.labels.values.any()
    assert rec.visual.values.max() < 0.5 and rec.audio.values.max() < 0.5
    # union bound over both channels of one video
    z = (0.5 - cfg.authentic_score_mean) / cfg.score_noise_std
    assert 2 * cfg.frames_per_video * norm.sf(z) < 1e-6
    # empirical check over 12k frames per channel
    many = generate_benchmark(GenConfig(video_count=40, authentic_video_fraction=1.0, seed=3))
    assert max(max(r.visual.values.max(), r.audio.values.max()) for r in many) < 0.5


def test_generation_is_deterministic():
    a, b = generate_benchmark(SMALL), generate_benchmark(SMALL)
    for x, y in zip(a, b):
        assert x.id == y.id
        assert x.visual.values.tobytes() == y.visual.values.tobytes()
        assert x.audio.values.tobytes() == y.audio.values.tobytes()
        assert x.labels == y.labels
    c = generate_benchmark(GenConfig(video_count=30, seed=8))
    assert any(not np.array_equal(x.visual.values, z.visual.values) for x, z in zip(a, c))


def test_video_streams_are_independent_of_count():
    a = generate_benchmark(GenConfig(video_count=5, seed=1))
    b = generate_benchmark(GenConfig(video_count=12, seed=1))
    for x, y in zip(a, b):
        assert np.array_equal(x.audio.values, y.audio.values)


def test_noise_free_tampered_frames_are_exact():
    cfg = GenConfig(video_count=20, tampered_score_mean=1.0, score_noise_std=0.0, authentic_video_fraction=0.0)
    for rec, sc in generate_benchmark_with_scenarios(cfg):
        hot = rec.labels.values == 1
        if sc.visual_tampered:
            assert np.all(rec.visual.values[hot] == 1.0)
        if sc.audio_tampered:
            assert np.all(rec.audio.values[hot] == 1.0)


def test_tamper_structure_and_scenarios():
    cfg = GenConfig(video_count=200, seed=11, tamper_fraction_range=(0.05, 0.30))
    T = cfg.frames_per_video
    margin = int(cfg.edge_margin_fraction * T)
    seen = set()
    for rec, sc in generate_benchmark_with_scenarios(cfg):
        seen.add(sc)
        runs = labels_to_intervals(rec.labels)
        if sc is Scenario.AUTHENTIC:
            assert runs == []
            continue
        assert 1 <= len(runs) <= 2
        n = int(rec.labels.values.sum())
        assert round(0.05 * T) <= n <= round(0.30 * T)
        assert runs[0].start_frame >= margin and runs[-1].end_frame <= T - margin
        hot = rec.labels.values == 1
        assert (rec.visual.values[hot].mean() > 0.5) == sc.visual_tampered
        assert (rec.audio.values[hot].mean() > 0.5) == sc.audio_tampered
    assert seen == set(Scenario)


def test_config_rejects_sub_frame_tampering():
    with pytest.raises(ValueError, match="< 1 tampered frame"):
        GenConfig(frames_per_video=10, tamper_fraction_range=(0.01, 0.05))
    with pytest.raises(ValueError):
        GenConfig(tamper_fraction_range=(0.4, 0.2))
    with pytest.raises(ValueError):
        GenConfig(score_noise_std=-1)
    # fully authentic benchmarks need no tampered frames
    GenConfig(frames_per_video=10, tamper_fraction_range=(0.01, 0.05), authentic_video_fraction=1.0)


def test_aggregate_visual_examples():
    assert aggregate_visual(TamperMap.from_array(np.zeros((4, 4)))) == 0.0
    assert aggregate_visual(TamperMap.from_array(np.ones((2, 3)))) == 1.0
    assert aggregate_visual(TamperMap(2, 2, [1, 0, 0, 0])) == 0.25


@given(
    st.lists(st.floats(0, 1), min_size=6, max_size=6),
    st.lists(st.floats(0, 1), min_size=6, max_size=6),
    st.floats(0, 1),
)
def test_aggregate_visual_is_linear_and_bounded(a, b, w):
    ma, mb = TamperMap(2, 3, a), TamperMap(2, 3, b)
    mix = TamperMap(2, 3, np.clip(w * np.array(a) + (1 - w) * np.array(b), 0, 1))
    got = aggregate_visual(mix)
    assert 0.0 <= got <= 1.0
    assert got == pytest.approx(w * aggregate_visual(ma) + (1 - w) * aggregate_visual(mb), abs=1e-12)


def test_aggregate_audio_examples():
    meta = VideoMeta(4, 25.0, 2560, 16000.0)
    for t in range(1, 5):
        assert aggregate_audio(np.ones(2560), meta, t) == 0.0
        assert aggregate_audio(np.zeros(2560), meta, t) == 1.0
    # C_2 = {n : 1/2 <= n/4 < 2/2} = {2, 3}
    assert aggregate_audio([1, 1, 0, 0], VideoMeta(2, 2.0, 4, 4.0), 2) == 1.0
    assert aggregate_audio([1, 1, 0, 0], VideoMeta(2, 2.0, 4, 4.0), 1) == 0.0
    with pytest.raises(ValueError):
        aggregate_audio([1, 1, 0, 0], VideoMeta(2, 2.0, 4, 4.0), 0)
    with pytest.raises(ValueError):
        aggregate_audio([1, 1, 0, 0], VideoMeta(2, 2.0, 4, 4.0), 3)


def test_aggregate_audio_empty_window_is_neutral():
    # 10 samples/s against 25 frames/s: frame 2 spans n/10 in [0.04, 0.08), no sample
    meta = VideoMeta(5, 25.0, 2, 10.0)
    assert aggregate_audio([0.0, 0.0], meta, 2) == 0.5


def test_aggregate_audio_matches_index_set_by_enumeration():
    rng = np.random.default_rng(0)
    meta = VideoMeta(7, 3.0, 20, 9.0)
    d = rng.uniform(size=20)
    for t in range(1, 8):
        members = [n for n in range(20) if (t - 1) / 3.0 <= n / 9.0 < t / 3.0]
        want = 1.0 - d[members].mean() if members else 0.5
        assert aggregate_audio(d, meta, t) == pytest.approx(want, abs=1e-15)


@pytest.fixture(scope="module")
def sample_record():
    return generate_benchmark(GenConfig(video_count=3, seed=5, authentic_video_fraction=0.0))[0]


def test_full_collapse_without_noise(sample_record):
    out = apply_distortion(sample_record, CompressionCollapse(1.0, noise_std=0.0))
    assert np.all(out.visual.values == 1.0)
    assert out.audio == sample_record.audio


def test_zero_offset_is_identity(sample_record):
    assert apply_distortion(sample_record, AvOffset(0.0)) == sample_record


def test_offset_round_trip_interior(sample_record):
    T = sample_record.meta.frame_count
    out = apply_distortions(sample_record, [AvOffset(0.5), AvOffset(-0.5)])
    np.testing.assert_array_equal(out.audio.values[13 : T - 13], sample_record.audio.values[13 : T - 13])


def test_offset_moves_audio_earlier(sample_record):
    out = apply_distortion(sample_record, AvOffset(0.04))  # one frame
    np.testing.assert_array_equal(out.audio.values[:-1], sample_record.audio.values[1:])


def test_stretch_remaps_audio_and_metadata(sample_record):
    T = sample_record.meta.frame_count
    out = apply_distortion(sample_record, Stretch(0.9))
    src = [min(T - 1, math.floor(0.9 * t)) for t in range(T)]
    np.testing.assert_array_equal(out.audio.values, sample_record.audio.values[src])
    assert out.meta.audio_sample_count == round(sample_record.meta.audio_sample_count / 0.9)
    assert out.visual == sample_record.visual


@given(
    st.sampled_from(
        [Stretch(0.9), Stretch(1.1), CompressionCollapse(0.85), AvOffset(-0.75), AvOffset(3.0), AudioNoise(0.12)]
    )
)
def test_distortions_preserve_labels_and_lengths(d):
    rec = generate_benchmark(GenConfig(video_count=1, seed=2, authentic_video_fraction=0.0))[0]
    out = apply_distortion(rec, d)
    assert out.labels == rec.labels
    assert len(out.visual) == len(out.audio) == rec.meta.frame_count


@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 20))
def test_compression_is_monotone_in_severity(v1, v2, idx):
    v1, v2 = min(v1, v2), max(v1, v2)
    rec = generate_benchmark(GenConfig(video_count=1, seed=idx))[0]
    for std in (0.0, 0.3):
        lo = apply_distortion(rec, CompressionCollapse(v1, noise_std=std)).visual.values
        hi = apply_distortion(rec, CompressionCollapse(v2, noise_std=std)).visual.values
        eps = compression_noise(rec.id, CompressionCollapse(v1, noise_std=std), len(lo))
        below = rec.visual.values <= 1.0 - eps  # frames still under their collapse target
        assert np.all(hi[below] >= lo[below] - 1e-15)


def test_presets_by_name():
    assert CompressionCollapse.preset("h264-crf28").severity == 0.95
    assert AudioNoise.preset("mp3-32k").std == 0.12
    with pytest.raises(KeyError):
        CompressionCollapse.preset("webp")
