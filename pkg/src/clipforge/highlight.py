"""Sliding-window scoring, violent-segment merging and highlight rendering.

Merging rule (mirrored verbatim by the web client): windows scoring >=
threshold are violent; their [start_sec, end_sec) spans are unioned, runs
separated by gaps <= max_gap_sec merge, and merged spans shorter than
min_len_sec are dropped. All arithmetic is IEEE double so independent
implementations agree bit-for-bit.
"""

import json
import os
import shutil
import subprocess
from dataclasses import dataclass, field

import cv2
import numpy as np

from .errors import (
    CheckpointMissing,
    EmptyPlan,
    MalformedPlan,
    RenderToolFailure,
    SchemaVersionMismatch,
)
from .media import file_id, iter_window_clips, probe_video, sliding_windows
from .nn import load_checkpoint
from .nn.ops import model_forward

PLAN_SCHEMA_VERSION = 1

DEFAULT_THRESHOLD = 0.5
DEFAULT_STRIDE = 8
DEFAULT_MAX_GAP_SEC = 1.0
DEFAULT_MIN_LEN_SEC = 1.0


@dataclass(frozen=True)
class WindowScore:
    start_frame: int
    end_frame: int
    start_sec: float
    end_sec: float
    p_violence: float


@dataclass(frozen=True)
class Segment:
    start_sec: float
    end_sec: float
    mean_score: float
    peak_score: float

    @property
    def duration(self):
        return self.end_sec - self.start_sec


@dataclass
class HighlightPlan:
    source_id: str
    threshold: float
    stride_frames: int
    max_gap_sec: float
    min_len_sec: float
    segments: list = field(default_factory=list)
    checkpoint_id: str = ""

    @property
    def total_sec(self):
        return sum(s.end_sec - s.start_sec for s in self.segments)


def load_scorer(checkpoint_path):
    """(params, config) from a checkpoint file; CheckpointMissing if absent."""
    if not os.path.isfile(checkpoint_path):
        raise CheckpointMissing(f"no checkpoint at {checkpoint_path}")
    return load_checkpoint(checkpoint_path)


def score_video(path, params, config, stride_frames=DEFAULT_STRIDE, batch_size=16, meta=None):
    """One violence probability per sliding window, in window order."""
    if meta is None:
        meta = probe_video(path)
    windows = sliding_windows(meta, stride_frames)
    scores = []
    batch_windows, batch_clips = [], []

    def flush():
        probs = model_forward(np.stack(batch_clips), params, config, mode="eval")
        for win, p in zip(batch_windows, probs[:, 1]):
            scores.append(
                WindowScore(
                    start_frame=win.start_frame,
                    end_frame=win.end_frame,
                    start_sec=win.start_sec,
                    end_sec=win.end_sec,
                    p_violence=float(p),
                )
            )
        batch_windows.clear()
        batch_clips.clear()

    for win, clip in iter_window_clips(path, windows, meta):
        batch_windows.append(win)
        batch_clips.append(clip)
        if len(batch_clips) == batch_size:
            flush()
    if batch_clips:
        flush()
    return scores


def segments_from_scores(
    scores,
    threshold=DEFAULT_THRESHOLD,
    max_gap_sec=DEFAULT_MAX_GAP_SEC,
    min_len_sec=DEFAULT_MIN_LEN_SEC,
):
    """Merge thresholded window scores into violent segments.

    Ties count as violent (>= threshold). Returns disjoint segments sorted by
    start; empty input yields an empty list.
    """
    violent = [s for s in sorted(scores, key=lambda s: s.start_sec) if s.p_violence >= threshold]
    merged = []  # [start, end, [contributing probabilities]]
    for s in violent:
        if merged and s.start_sec - merged[-1][1] <= max_gap_sec:
            merged[-1][1] = max(merged[-1][1], s.end_sec)
            merged[-1][2].append(s.p_violence)
        else:
            merged.append([s.start_sec, s.end_sec, [s.p_violence]])
    out = []
    for start, end, probs in merged:
        if end - start >= min_len_sec:
            out.append(
                Segment(
                    start_sec=start,
                    end_sec=end,
                    mean_score=sum(probs) / len(probs),
                    peak_score=max(probs),
                )
            )
    return out


def build_plan(
    source_id,
    scores,
    threshold=DEFAULT_THRESHOLD,
    stride_frames=DEFAULT_STRIDE,
    max_gap_sec=DEFAULT_MAX_GAP_SEC,
    min_len_sec=DEFAULT_MIN_LEN_SEC,
    checkpoint_id="",
):
    segments = segments_from_scores(scores, threshold, max_gap_sec, min_len_sec)
    return HighlightPlan(
        source_id=source_id,
        threshold=threshold,
        stride_frames=stride_frames,
        max_gap_sec=max_gap_sec,
        min_len_sec=min_len_sec,
        segments=segments,
        checkpoint_id=checkpoint_id,
    )


def plan_to_dict(plan):
    return {
        "schema_version": PLAN_SCHEMA_VERSION,
        "source_id": plan.source_id,
        "checkpoint_id": plan.checkpoint_id,
        "params": {
            "threshold": plan.threshold,
            "stride_frames": plan.stride_frames,
            "max_gap_sec": plan.max_gap_sec,
            "min_len_sec": plan.min_len_sec,
        },
        "segments": [
            {
                "start_sec": s.start_sec,
                "end_sec": s.end_sec,
                "mean_score": s.mean_score,
                "peak_score": s.peak_score,
            }
            for s in plan.segments
        ],
        "total_sec": plan.total_sec,
    }


def export_plan(plan, path):
    with open(path, "w") as fh:
        json.dump(plan_to_dict(plan), fh, indent=2)
    return path


def plan_from_dict(d):
    if not isinstance(d, dict) or "schema_version" not in d:
        raise MalformedPlan("plan JSON lacks a schema_version")
    if d["schema_version"] != PLAN_SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"plan schema {d['schema_version']}, expected {PLAN_SCHEMA_VERSION}"
        )
    try:
        params = d["params"]
        segments = [
            Segment(
                start_sec=float(s["start_sec"]),
                end_sec=float(s["end_sec"]),
                mean_score=float(s["mean_score"]),
                peak_score=float(s["peak_score"]),
            )
            for s in d["segments"]
        ]
        plan = HighlightPlan(
            source_id=str(d["source_id"]),
            threshold=float(params["threshold"]),
            stride_frames=int(params["stride_frames"]),
            max_gap_sec=float(params["max_gap_sec"]),
            min_len_sec=float(params["min_len_sec"]),
            segments=segments,
            checkpoint_id=str(d.get("checkpoint_id", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedPlan(f"plan JSON malformed: {exc}") from exc
    _validate_segments(plan)
    if abs(plan.total_sec - float(d["total_sec"])) > 1e-6:
        raise MalformedPlan(
            f"total_sec {d['total_sec']} disagrees with segment sum {plan.total_sec}"
        )
    return plan


def _validate_segments(plan):
    prev_end = -float("inf")
    for s in plan.segments:
        if s.end_sec <= s.start_sec:
            raise MalformedPlan(f"segment [{s.start_sec}, {s.end_sec}) is empty or reversed")
        if s.start_sec < prev_end:
            raise MalformedPlan(f"segment starting at {s.start_sec} overlaps previous")
        prev_end = s.end_sec


def import_plan(path):
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedPlan(f"not valid JSON: {exc}") from exc
    return plan_from_dict(d)


def render_highlight(plan, source_path, out_path, tool="auto"):
    """Concatenate the plan's segments from the source video into out_path.

    Cuts happen at source frame boundaries; output duration lands within
    two frames of the plan total per cut. Uses the ffmpeg CLI when present
    (exact trim/concat cut list), otherwise an OpenCV re-encode.
    """
    if not plan.segments:
        raise EmptyPlan("plan has no segments to render")
    if file_id(source_path) != plan.source_id:
        raise MalformedPlan(
            f"source {source_path} does not match plan source_id {plan.source_id}"
        )
    cuts = [(s.start_sec, s.end_sec) for s in plan.segments]
    if tool == "ffmpeg" or (tool == "auto" and shutil.which("ffmpeg")):
        _render_ffmpeg(cuts, source_path, out_path)
    else:
        _render_opencv(cuts, source_path, out_path)
    return out_path


def _render_ffmpeg(cuts, source_path, out_path):
    parts = []
    for i, (start, end) in enumerate(cuts):
        parts.append(f"[0:v]trim=start={start}:end={end},setpts=PTS-STARTPTS[v{i}]")
    concat_in = "".join(f"[v{i}]" for i in range(len(cuts)))
    graph = ";".join(parts + [f"{concat_in}concat=n={len(cuts)}:v=1:a=0[out]"])
    cmd = [
        "ffmpeg", "-y", "-i", source_path,
        "-filter_complex", graph, "-map", "[out]", out_path,
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RenderToolFailure(f"ffmpeg exited {proc.returncode}: {proc.stderr[-2000:]}")


def _render_opencv(cuts, source_path, out_path):
    cap = cv2.VideoCapture(source_path)
    if not cap.isOpened():
        raise RenderToolFailure(f"cannot reopen {source_path} for rendering")
    try:
        fps = cap.get(cv2.CAP_PROP_FPS)
        size = (
            int(cap.get(cv2.CAP_PROP_FRAME_WIDTH)),
            int(cap.get(cv2.CAP_PROP_FRAME_HEIGHT)),
        )
        fourcc = "mp4v" if out_path.lower().endswith(".mp4") else "MJPG"
        writer = cv2.VideoWriter(out_path, cv2.VideoWriter_fourcc(*fourcc), fps, size)
        if not writer.isOpened():
            raise RenderToolFailure(f"cannot open writer for {out_path}")
        ranges = [(int(round(a * fps)), int(round(b * fps))) for a, b in cuts]
        pos = 0
        ri = 0
        while ri < len(ranges):
            ok, frame = cap.read()
            if not ok:
                break
            if ranges[ri][0] <= pos < ranges[ri][1]:
                writer.write(frame)
            pos += 1
            while ri < len(ranges) and pos >= ranges[ri][1]:
                ri += 1
        writer.release()
    finally:
        cap.release()
