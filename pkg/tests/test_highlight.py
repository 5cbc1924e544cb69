"""Highlighter: segment merging vs the frame-set oracle, plan I/O, rendering."""

import numpy as np
import pytest

from clipforge import highlight, media, nn, synth
from clipforge.errors import (
    CheckpointMissing,
    EmptyPlan,
    MalformedPlan,
    SchemaVersionMismatch,
)
from clipforge.highlight import (
    HighlightPlan,
    Segment,
    WindowScore,
    build_plan,
    export_plan,
    import_plan,
    plan_from_dict,
    plan_to_dict,
    render_highlight,
    score_video,
    segments_from_scores,
)

FPS = 16.0


def _score(start_frame, p):
    return WindowScore(
        start_frame=start_frame,
        end_frame=start_frame + 16,
        start_sec=start_frame / FPS,
        end_sec=(start_frame + 16) / FPS,
        p_violence=p,
    )


def _random_scores(gen, max_windows=24):
    stride = int(gen.integers(1, 20))
    n = int(gen.integers(0, max_windows))
    return [_score(i * stride, float(np.round(gen.random(), 3))) for i in range(n)]


def frame_set_oracle(scores, threshold, max_gap_sec, min_len_sec):
    """Brute force: violent frames as a set, union, close gaps, filter length."""
    frames = set()
    for s in scores:
        if s.p_violence >= threshold:
            frames.update(range(s.start_frame, s.end_frame))
    runs = []
    for f in sorted(frames):
        if runs and f == runs[-1][1]:
            runs[-1][1] = f + 1
        else:
            runs.append([f, f + 1])
    closed = []
    for a, b in runs:
        if closed and (a - closed[-1][1]) / FPS <= max_gap_sec:
            closed[-1][1] = b
        else:
            closed.append([a, b])
    return [
        (a / FPS, b / FPS) for a, b in closed if (b - a) / FPS >= min_len_sec
    ]


def test_all_below_threshold_gives_nothing():
    scores = [_score(i * 8, 0.2) for i in range(10)]
    assert segments_from_scores(scores, threshold=0.5) == []


def test_overlapping_windows_union():
    scores = [_score(0, 0.9), _score(8, 0.8)]
    (seg,) = segments_from_scores(scores, threshold=0.5, max_gap_sec=0.0, min_len_sec=0.0)
    assert (seg.start_sec, seg.end_sec) == (0.0, 1.5)
    assert seg.peak_score == 0.9
    assert abs(seg.mean_score - 0.85) < 1e-12


def test_segments_match_frame_set_oracle():
    gen = np.random.default_rng(99)
    for _ in range(2000):
        scores = _random_scores(gen)
        threshold = float(np.round(gen.uniform(0.1, 0.9), 3))
        max_gap = float(gen.choice([0.0, 0.25, 0.5, 1.0, 2.0]))
        min_len = float(gen.choice([0.0, 0.5, 1.0, 1.5]))
        got = segments_from_scores(scores, threshold, max_gap, min_len)
        expected = frame_set_oracle(scores, threshold, max_gap, min_len)
        assert [(s.start_sec, s.end_sec) for s in got] == expected


def test_threshold_monotonicity():
    gen = np.random.default_rng(5)
    for _ in range(300):
        scores = _random_scores(gen)
        durations = []
        for thr in (0.1, 0.3, 0.5, 0.7, 0.9):
            segs = segments_from_scores(scores, threshold=thr)
            durations.append(sum(s.duration for s in segs))
        assert all(b <= a + 1e-12 for a, b in zip(durations, durations[1:]))


def test_idempotence_on_indicator_scores():
    gen = np.random.default_rng(17)
    for _ in range(300):
        scores = _random_scores(gen)
        params = dict(threshold=0.5, max_gap_sec=1.0, min_len_sec=1.0)
        segs = segments_from_scores(scores, **params)
        indicator = [
            _score(
                s.start_frame,
                1.0 if any(g.start_sec <= s.start_sec and s.end_sec <= g.end_sec for g in segs) else 0.0,
            )
            for s in scores
        ]
        again = segments_from_scores(indicator, **params)
        assert [(s.start_sec, s.end_sec) for s in again] == [
            (s.start_sec, s.end_sec) for s in segs
        ]


def test_segments_disjoint_sorted_and_above_threshold():
    gen = np.random.default_rng(23)
    for _ in range(300):
        scores = _random_scores(gen)
        segs = segments_from_scores(scores, threshold=0.4)
        prev_end = -1.0
        for s in segs:
            assert s.start_sec >= prev_end
            assert s.end_sec > s.start_sec
            assert s.peak_score >= s.mean_score >= 0.4
            prev_end = s.end_sec


@pytest.fixture(scope="module")
def scored_video(tmp_path_factory):
    out = tmp_path_factory.mktemp("hl")
    spec = synth.SynthSpec(n_per_class=1, seed=21)
    path, _ = synth.generate_composite(spec, [(1.0, 2.0)], str(out / "v.avi"), duration_sec=4.0)
    cfg = nn.tiny_config()
    cfg = nn.ModelConfig(
        seq_len=16, image_h=64, image_w=64,
        encoder=nn.EncoderSpec(stem_channels=2, block_channels=(4,)),
        lstm_units=3, dense_units=(5,), dropout_rate=0.0,
    )
    params = nn.init_params(cfg, seed=2)
    return path, params, cfg


def test_score_video_window_count_and_range(scored_video):
    path, params, cfg = scored_video
    scores = score_video(path, params, cfg, stride_frames=8)
    assert len(scores) == 7  # 64 frames, stride 8
    assert all(0.0 <= s.p_violence <= 1.0 for s in scores)
    again = score_video(path, params, cfg, stride_frames=8)
    assert [s.p_violence for s in again] == [s.p_violence for s in scores]


def test_load_scorer_missing_checkpoint(tmp_path):
    with pytest.raises(CheckpointMissing):
        highlight.load_scorer(str(tmp_path / "nope.ckpt"))


def _plan_with(segs, source_id="src"):
    return HighlightPlan(
        source_id=source_id,
        threshold=0.5,
        stride_frames=8,
        max_gap_sec=1.0,
        min_len_sec=1.0,
        segments=segs,
        checkpoint_id="abc",
    )


def test_plan_roundtrip(tmp_path):
    segs = [
        Segment(0.5, 2.0, 0.8, 0.95),
        Segment(3.0, 4.25, 0.7, 0.7),
    ]
    plan = _plan_with(segs)
    path = str(tmp_path / "plan.json")
    export_plan(plan, path)
    back = import_plan(path)
    assert back == plan
    assert abs(back.total_sec - 2.75) < 1e-12


def test_plan_rejects_overlap():
    d = plan_to_dict(_plan_with([Segment(0.0, 2.0, 0.8, 0.9), Segment(1.5, 3.0, 0.8, 0.9)]))
    with pytest.raises(MalformedPlan):
        plan_from_dict(d)


def test_plan_rejects_unknown_version(tmp_path):
    d = plan_to_dict(_plan_with([Segment(0.0, 2.0, 0.8, 0.9)]))
    d["schema_version"] = 99
    with pytest.raises(SchemaVersionMismatch):
        plan_from_dict(d)


def test_plan_rejects_bad_total():
    d = plan_to_dict(_plan_with([Segment(0.0, 2.0, 0.8, 0.9)]))
    d["total_sec"] = 5.0
    with pytest.raises(MalformedPlan):
        plan_from_dict(d)


def test_render_highlight_duration(tmp_path, scored_video):
    path, _, _ = scored_video
    segs = [Segment(0.0, 2.0, 0.9, 0.95), Segment(2.5, 4.0, 0.8, 0.9)]
    plan = _plan_with(segs, source_id=media.file_id(path))
    out = str(tmp_path / "highlight.avi")
    render_highlight(plan, path, out)
    meta = media.probe_video(out)
    expected_frames = plan.total_sec * meta.raw_fps
    assert abs(meta.raw_frame_count - expected_frames) <= 4
    # chronological order: rendering ignores score magnitude by construction


def test_render_empty_plan(tmp_path, scored_video):
    path, _, _ = scored_video
    with pytest.raises(EmptyPlan):
        render_highlight(_plan_with([], source_id=media.file_id(path)), path, str(tmp_path / "o.avi"))


def test_render_source_mismatch(tmp_path, scored_video):
    path, _, _ = scored_video
    plan = _plan_with([Segment(0.0, 1.0, 0.9, 0.9)], source_id="deadbeef")
    with pytest.raises(MalformedPlan):
        render_highlight(plan, path, str(tmp_path / "o.avi"))
