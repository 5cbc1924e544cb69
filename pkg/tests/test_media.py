"""media module: probing, resampling, clip sampling, sliding windows."""

import os

import cv2
import numpy as np
import pytest

from clipforge import media
from clipforge.errors import BadChannelCount, DecodeError, EmptyVideo, MissingFile
from clipforge.synth import SynthSpec, clip_frames


def _write(frames, path, fps):
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"), fps, (frames.shape[2], frames.shape[1]))
    for f in frames:
        writer.write(cv2.cvtColor(f, cv2.COLOR_RGB2BGR))
    writer.release()


@pytest.fixture(scope="module")
def video_64f(tmp_path_factory):
    """A 4-second 16fps synthetic video (64 resampled frames)."""
    path = tmp_path_factory.mktemp("vid") / "v64.avi"
    spec = SynthSpec(n_per_class=1, duration_sec=4.0, seed=7)
    _write(clip_frames(spec, 1, 0), path, 16.0)
    return str(path)


@pytest.fixture(scope="module")
def video_10f(tmp_path_factory):
    path = tmp_path_factory.mktemp("vid") / "v10.avi"
    spec = SynthSpec(n_per_class=1, duration_sec=0.625, seed=3)
    _write(clip_frames(spec, 0, 0), path, 16.0)
    return str(path)


def test_probe_resamples_to_16fps(video_64f):
    meta = media.probe_video(video_64f)
    assert meta.fps == 16.0
    assert meta.frame_count == 64
    assert abs(meta.duration_sec - 4.0) <= 1.0 / 16.0
    assert meta.width == meta.height == 64


def test_probe_resamples_other_rates(tmp_path):
    # 120 source frames written at 30 fps = 4 s -> 64 resampled frames
    spec = SynthSpec(n_per_class=1, duration_sec=7.5, seed=5)  # 120 frames
    path = tmp_path / "v30.avi"
    _write(clip_frames(spec, 0, 0), path, 30.0)
    meta = media.probe_video(str(path))
    assert meta.raw_frame_count == 120
    assert meta.frame_count == 64


def test_probe_missing_file(tmp_path):
    with pytest.raises(MissingFile):
        media.probe_video(str(tmp_path / "absent.avi"))


def test_probe_not_a_video(tmp_path):
    junk = tmp_path / "junk.avi"
    junk.write_bytes(b"this is not a container")
    with pytest.raises((DecodeError, EmptyVideo)):
        media.probe_video(str(junk))


def test_probe_zero_frame_container(tmp_path):
    path = tmp_path / "empty.avi"
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"), 16.0, (32, 32))
    writer.release()
    with pytest.raises((EmptyVideo, DecodeError)):
        media.probe_video(str(path))


@pytest.mark.parametrize("value,expected", [(255, 1.0), (0, 0.0), (128, 128 / 255.0)])
def test_resize_normalize_constant_images(value, expected):
    frame = np.full((48, 80, 3), value, dtype=np.uint8)
    out = media.resize_normalize(frame)
    assert out.shape == (64, 64, 3)
    assert out.dtype == np.float32
    np.testing.assert_allclose(out, expected, atol=1e-6)


def test_resize_normalize_rejects_bad_channels():
    with pytest.raises(BadChannelCount):
        media.resize_normalize(np.zeros((32, 32), dtype=np.uint8))
    with pytest.raises(BadChannelCount):
        media.resize_normalize(np.zeros((32, 32, 4), dtype=np.uint8))


def test_sample_clip_uniform_stride(video_64f):
    clip = media.sample_clip_uniform(video_64f)
    assert clip.data.shape == (16, 64, 64, 3)
    assert clip.data.dtype == np.float32
    assert clip.data.min() >= 0.0 and clip.data.max() <= 1.0
    # skip = 64 // 16 = 4: first source frame 0, last source frame 60
    assert clip.origin[1] == 0
    assert clip.origin[2] == 60


def test_sample_clip_uniform_short_video_pads(video_10f):
    meta = media.probe_video(video_10f)
    assert meta.frame_count == 10
    clip = media.sample_clip_uniform(video_10f)
    assert clip.data.shape == (16, 64, 64, 3)
    # frames 10..15 repeat frame 9
    for i in range(10, 16):
        np.testing.assert_array_equal(clip.data[i], clip.data[9])
    assert not np.array_equal(clip.data[0], clip.data[9])


def test_sample_clip_deterministic(video_64f):
    a = media.sample_clip_uniform(video_64f)
    b = media.sample_clip_uniform(video_64f)
    np.testing.assert_array_equal(a.data, b.data)
    assert a.origin == b.origin


def test_sliding_windows_examples(video_64f, video_10f):
    meta = media.probe_video(video_64f)
    wins = media.sliding_windows(meta, 8)
    assert [w.start_frame for w in wins] == [0, 8, 16, 24, 32, 40, 48]
    assert len(media.sliding_windows(meta, 16)) == 4
    short = media.sliding_windows(media.probe_video(video_10f), 8)
    assert len(short) == 1
    assert (short[0].start_frame, short[0].end_frame) == (0, 10)


def test_sliding_windows_count_matches_bruteforce():
    gen = np.random.default_rng(42)
    meta_t = media.VideoMeta("x", "x", 16.0, 0, 64, 64, 16.0, 0)
    for _ in range(1000):
        fc = int(gen.integers(16, 2000))
        stride = int(gen.integers(1, 64))
        meta = media.VideoMeta("x", "x", 16.0, fc, 64, 64, 16.0, fc)
        wins = media.sliding_windows(meta, stride)
        brute = [s for s in range(0, fc + 1, stride) if s + 16 <= fc]
        assert len(wins) == len(brute) == (fc - 16) // stride + 1
        starts = [w.start_frame for w in wins]
        assert starts == brute
        assert starts == sorted(set(starts))  # strictly increasing, distinct


def test_window_clips_match_direct_sampling(video_64f):
    meta = media.probe_video(video_64f)
    wins = media.sliding_windows(meta, 8)
    got = list(media.iter_window_clips(video_64f, wins, meta))
    assert len(got) == 7
    frames = {j: f for j, f in media.iter_resampled_frames(video_64f, meta)}
    for win, clip in got:
        assert clip.shape == (16, 64, 64, 3)
        expected = np.stack([frames[j] for j in range(win.start_frame, win.end_frame)])
        np.testing.assert_array_equal(clip, expected)


def test_window_clips_short_video_padded(video_10f):
    meta = media.probe_video(video_10f)
    wins = media.sliding_windows(meta, 8)
    (win, clip), = list(media.iter_window_clips(video_10f, wins, meta))
    assert clip.shape == (16, 64, 64, 3)
    np.testing.assert_array_equal(clip[9], clip[15])
