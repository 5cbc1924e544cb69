"""Synthetic labeled videos for desk-scale training and end-to-end tests.

Every clip shows one bright block over a fixed gradient background. Calm
clips drift the block slowly along a straight line at constant brightness;
violent clips relocate it by a large random jump every frame. Single-frame
appearance is distributed identically across classes (one block, uniform
position and brightness), so the class is only recoverable from temporal
dynamics -- a per-frame classifier stays near chance while motion statistics
separate the classes by a wide margin.
"""

import json
import os
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import OverlappingIntervals
from .labels import CLASSES_LIST as CLASS_NAMES  # index 1 = positive class


@dataclass(frozen=True)
class SynthSpec:
    n_per_class: int = 20
    duration_sec: float = 1.0
    seed: int = 0
    violent_motion_amplitude: float = 48.0  # per-frame jump bound, pixels
    calm_motion_amplitude: float = 0.45  # drift speed, pixels per frame
    frame_size: int = 64

    @property
    def fps(self):
        return 16.0

    def __post_init__(self):
        if self.calm_motion_amplitude <= 0 or self.violent_motion_amplitude <= 0:
            raise ValueError("motion amplitudes must be positive")
        if self.violent_motion_amplitude <= self.calm_motion_amplitude:
            raise ValueError("violent amplitude must exceed calm amplitude")

    @property
    def frames_per_clip(self):
        return max(1, int(round(self.duration_sec * self.fps)))


class _BlockScene:
    """Stateful renderer: fixed gradient background plus one moving block."""

    def __init__(self, rng, size):
        self.rng = rng
        self.size = size
        self.side = max(6, int(size * 0.4))
        yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / max(size - 1, 1)
        base = 25 + 40 * (0.5 * xx + 0.5 * yy)
        self.background = np.repeat(base[:, :, None], 3, axis=2)
        self.hi = size - self.side
        self.pos = rng.uniform(0, self.hi, size=2)
        angle = rng.uniform(0, 2 * np.pi)
        self.vel = np.array([np.sin(angle), np.cos(angle)])
        self.brightness = rng.uniform(140, 250)

    def step_calm(self, amplitude):
        self.pos, self.vel = _bounce(self.pos, self.vel, amplitude, self.hi)
        return self._render()

    def step_violent(self, amplitude):
        jump = self.rng.uniform(-amplitude, amplitude, size=2)
        # reflect at the walls: clipping would pile positions onto the edges
        # and leak class information into single-frame position marginals
        self.pos = _reflect(self.pos + jump, self.hi)
        return self._render()

    def _render(self):
        frame = self.background.copy()
        r, c = int(round(self.pos[0])), int(round(self.pos[1]))
        frame[r : r + self.side, c : c + self.side] = self.brightness
        return frame.astype(np.uint8)


def _reflect(pos, hi):
    m = np.mod(pos, 2 * hi)
    return np.where(m <= hi, m, 2 * hi - m)


def _bounce(pos, vel, speed, hi):
    nxt = pos + vel / max(np.linalg.norm(vel), 1e-9) * speed
    for ax in range(2):
        if nxt[ax] < 0 or nxt[ax] > hi:
            vel[ax] = -vel[ax]
            nxt[ax] = np.clip(nxt[ax], 0, hi)
    return nxt, vel


def clip_frames(spec, class_index, clip_index):
    """Deterministic (T, S, S, 3) uint8 RGB frames for one labeled clip."""
    rng = np.random.default_rng([spec.seed, class_index, clip_index])
    scene = _BlockScene(rng, spec.frame_size)
    frames = []
    for _ in range(spec.frames_per_clip):
        if class_index == 1:
            frames.append(scene.step_violent(spec.violent_motion_amplitude))
        else:
            frames.append(scene.step_calm(spec.calm_motion_amplitude))
    return np.stack(frames)


def _write_video(frames, path, fps):
    size = (frames.shape[2], frames.shape[1])
    writer = cv2.VideoWriter(path, cv2.VideoWriter_fourcc(*"MJPG"), fps, size)
    if not writer.isOpened():
        raise IOError(f"cannot open video writer for {path}")
    try:
        for frame in frames:
            writer.write(cv2.cvtColor(frame, cv2.COLOR_RGB2BGR))
    finally:
        writer.release()


def generate(spec, out_dir):
    """Write a class-per-directory dataset; returns {class_name: [paths]}."""
    written = {}
    for class_index, name in enumerate(CLASS_NAMES):
        class_dir = os.path.join(out_dir, name)
        os.makedirs(class_dir, exist_ok=True)
        paths = []
        for i in range(spec.n_per_class):
            path = os.path.join(class_dir, f"{name.lower()}_{i:04d}.avi")
            _write_video(clip_frames(spec, class_index, i), path, spec.fps)
            paths.append(path)
        written[name] = paths
    return written


def composite_frames(spec, violent_intervals, duration_sec=None):
    """Frames for one long video: calm everywhere except the given intervals."""
    duration = spec.duration_sec if duration_sec is None else duration_sec
    intervals = sorted((float(s), float(e)) for s, e in violent_intervals)
    for (s0, e0), (s1, e1) in zip(intervals, intervals[1:]):
        if s1 < e0:
            raise OverlappingIntervals(f"[{s1}, {e1}) overlaps [{s0}, {e0})")
    for s, e in intervals:
        if s < 0 or e > duration or e <= s:
            raise OverlappingIntervals(f"interval [{s}, {e}) outside 0..{duration}")
    n_frames = int(round(duration * spec.fps))
    rng = np.random.default_rng([spec.seed, 2, 0])
    scene = _BlockScene(rng, spec.frame_size)
    frames = []
    for t in range(n_frames):
        sec = t / spec.fps
        if any(s <= sec < e for s, e in intervals):
            frames.append(scene.step_violent(spec.violent_motion_amplitude))
        else:
            frames.append(scene.step_calm(spec.calm_motion_amplitude))
    return np.stack(frames), intervals


def generate_composite(spec, violent_intervals, out_path, duration_sec=None):
    """Write a composite video plus its ground-truth intervals JSON."""
    frames, intervals = composite_frames(spec, violent_intervals, duration_sec)
    _write_video(frames, out_path, spec.fps)
    truth = {
        "video": os.path.basename(out_path),
        "duration_sec": frames.shape[0] / spec.fps,
        "fps": spec.fps,
        "intervals": [[s, e] for s, e in intervals],
    }
    truth_path = os.path.splitext(out_path)[0] + ".truth.json"
    with open(truth_path, "w") as fh:
        json.dump(truth, fh, indent=2)
    return out_path, truth_path


def motion_energy(frames):
    """Mean absolute inter-frame pixel difference; the class-separating statistic."""
    f = frames.astype(np.float64)
    return float(np.abs(np.diff(f, axis=0)).mean())
