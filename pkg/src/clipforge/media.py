"""Video decoding, frame sampling and sliding-window enumeration.

All frame indexing happens in a canonical 16 fps space: a source video is
conceptually resampled to 16 fps before anything else, so one 16-frame window
always spans exactly one second. Frames are RGB, resized to 64x64 and scaled
to [0, 1] float32.
"""

import hashlib
import os
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import BadChannelCount, DecodeError, EmptyVideo, MissingFile

TARGET_FPS = 16.0
CLIP_LEN = 16
FRAME_SIZE = 64

VIDEO_EXTENSIONS = {".mp4", ".avi", ".mov", ".mkv", ".webm", ".mpg", ".mpeg", ".m4v", ".wmv"}


@dataclass(frozen=True)
class VideoMeta:
    source_id: str
    path: str
    fps: float  # canonical resampled rate (16.0)
    frame_count: int  # frames after resampling to 16 fps
    width: int
    height: int
    raw_fps: float
    raw_frame_count: int

    @property
    def duration_sec(self):
        return self.frame_count / self.fps


@dataclass(frozen=True)
class WindowSpec:
    start_frame: int
    end_frame: int
    start_sec: float
    end_sec: float


@dataclass(frozen=True)
class ClipTensor:
    """(16, 64, 64, 3) float32 in [0, 1] plus provenance of the source frames."""

    data: np.ndarray
    origin: tuple  # (source_id, first_source_frame, last_source_frame)


def file_id(path):
    """Short content hash used as the opaque source id."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()[:16]


def probe_video(path):
    """Open a container and report metadata in the resampled index space."""
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise MissingFile(f"no such video: {path}")
    cap = cv2.VideoCapture(path)
    try:
        if not cap.isOpened():
            raise DecodeError(f"cannot decode {path}")
        raw_fps = cap.get(cv2.CAP_PROP_FPS)
        raw_count = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
        width = int(cap.get(cv2.CAP_PROP_FRAME_WIDTH))
        height = int(cap.get(cv2.CAP_PROP_FRAME_HEIGHT))
        if raw_count <= 0:
            # unreliable header: count frames the hard way
            raw_count = 0
            while cap.grab():
                raw_count += 1
    finally:
        cap.release()
    if raw_count == 0:
        raise EmptyVideo(f"{path} contains no frames")
    if raw_fps <= 0:
        raise DecodeError(f"cannot determine frame rate of {path}")
    frame_count = max(1, int(raw_count * TARGET_FPS / raw_fps))
    return VideoMeta(
        source_id=file_id(path),
        path=path,
        fps=TARGET_FPS,
        frame_count=frame_count,
        width=width,
        height=height,
        raw_fps=raw_fps,
        raw_frame_count=raw_count,
    )


def resize_normalize(frame):
    """Bilinear resize an RGB uint8 frame to 64x64 and scale into [0, 1]."""
    frame = np.asarray(frame)
    if frame.size == 0 or frame.ndim != 3 or frame.shape[2] != 3:
        raise BadChannelCount(f"expected a nonempty HxWx3 frame, got shape {frame.shape}")
    resized = cv2.resize(frame, (FRAME_SIZE, FRAME_SIZE), interpolation=cv2.INTER_LINEAR)
    return resized.astype(np.float32) / 255.0


def _source_index(j, meta):
    """Map a resampled frame index to a source frame index (floor sampling)."""
    return min(meta.raw_frame_count - 1, int(j * meta.raw_fps / TARGET_FPS))


def iter_resampled_frames(path, meta=None):
    """Yield (resampled_index, 64x64x3 float frame) decoding each source frame once."""
    if meta is None:
        meta = probe_video(path)
    cap = cv2.VideoCapture(meta.path)
    try:
        if not cap.isOpened():
            raise DecodeError(f"cannot decode {meta.path}")
        src_pos = -1
        frame = None
        processed = None
        for j in range(meta.frame_count):
            want = _source_index(j, meta)
            while src_pos < want:
                ok, raw = cap.read()
                if not ok:
                    break  # header overstated the count; reuse the last frame
                frame = raw
                src_pos += 1
                processed = None
            if frame is None:
                raise EmptyVideo(f"{meta.path} contains no decodable frames")
            if processed is None:
                processed = resize_normalize(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
            yield j, processed
    finally:
        cap.release()


def sample_clip_uniform(path, n=CLIP_LEN, meta=None):
    """Pick n frames at a uniform stride (skip = max(frame_count // n, 1)).

    Indices past the end repeat the final frame, preserving the clip shape for
    short videos. Deterministic for a fixed file.
    """
    if meta is None:
        meta = probe_video(path)
    skip = max(meta.frame_count // n, 1)
    indices = [min(i * skip, meta.frame_count - 1) for i in range(n)]
    needed = set(indices)
    frames = {}
    for j, frame in iter_resampled_frames(path, meta):
        if j in needed:
            frames[j] = frame
        if j >= max(needed):
            break
    data = np.stack([frames[j] for j in indices]).astype(np.float32)
    first, last = _source_index(indices[0], meta), _source_index(indices[-1], meta)
    return ClipTensor(data=data, origin=(meta.source_id, first, last))


def sliding_windows(meta, stride_frames):
    """Enumerate [s, s+16) windows at the given stride over the resampled stream.

    Videos shorter than one window yield a single window covering the whole
    video; padding to 16 frames happens when the clip is materialized.
    """
    if stride_frames < 1:
        raise ValueError("stride_frames must be >= 1")
    fc = meta.frame_count
    if fc <= 0:
        raise EmptyVideo(f"{meta.path} has no frames")
    if fc < CLIP_LEN:
        return [WindowSpec(0, fc, 0.0, fc / TARGET_FPS)]
    out = []
    s = 0
    while s + CLIP_LEN <= fc:
        out.append(WindowSpec(s, s + CLIP_LEN, s / TARGET_FPS, (s + CLIP_LEN) / TARGET_FPS))
        s += stride_frames
    return out


def iter_window_clips(path, windows, meta=None):
    """Yield (window, (16,64,64,3) array) for ordered sliding windows.

    Streams the video once, buffering only the frames still needed; short
    windows are padded by repeating the final frame.
    """
    if meta is None:
        meta = probe_video(path)
    if not windows:
        return
    buffer = {}
    pending = list(windows)
    for j, frame in iter_resampled_frames(path, meta):
        buffer[j] = frame
        while pending and j >= min(pending[0].end_frame, meta.frame_count) - 1:
            win = pending.pop(0)
            yield win, _materialize(buffer, win)
            if pending:
                low = pending[0].start_frame
                for k in [k for k in buffer if k < low]:
                    del buffer[k]
        if not pending:
            return
    for win in pending:  # decode ended early: pad from what was seen
        yield win, _materialize(buffer, win)


def _materialize(buffer, win):
    frames = []
    last = None
    for j in range(win.start_frame, win.start_frame + CLIP_LEN):
        got = buffer.get(j)
        if got is not None:
            last = got
        frames.append(last)
    if frames[0] is None:
        raise EmptyVideo("no frames available for window")
    # leading Nones can only happen if the first frame is missing entirely
    return np.stack(frames).astype(np.float32)
