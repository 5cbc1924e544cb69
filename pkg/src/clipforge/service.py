"""HTTP facade: upload videos, run scoring/highlight jobs, fetch artifacts.

Configuration comes from an optional JSON file with CLIPFORGE_* environment
overrides. Storage layout:

    <storage_dir>/videos/<video_id>.<ext>   uploaded sources (+ .json metadata)
    <storage_dir>/jobs/<job_id>.json        job records
    <storage_dir>/artifacts/<job_id>/       scores.json, plan.json, highlight video
"""

import json
import os
import shutil
import tempfile
from contextlib import asynccontextmanager
from dataclasses import asdict, dataclass

from fastapi import FastAPI, HTTPException, UploadFile
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from . import highlight as hl
from .errors import ClipforgeError, DecodeError, EmptyVideo
from .jobs import JOB_KINDS, JobStore, WorkerPool
from .media import probe_video
from .nn import checkpoint_id, load_checkpoint

ENV_PREFIX = "CLIPFORGE_"


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8765
    checkpoint_path: str = ""
    storage_dir: str = "clipforge_storage"
    max_upload_bytes: int = 256 * 1024 * 1024
    workers: int = 1

    def to_dict(self):
        return asdict(self)


_ENV_FIELDS = {
    "PORT": ("port", int),
    "CHECKPOINT_PATH": ("checkpoint_path", str),
    "STORAGE_DIR": ("storage_dir", str),
    "MAX_UPLOAD_BYTES": ("max_upload_bytes", int),
    "WORKERS": ("workers", int),
}


def load_service_config(path=None, env=None):
    """JSON config file plus CLIPFORGE_* environment overrides."""
    env = os.environ if env is None else env
    values = {}
    if path:
        with open(path) as fh:
            raw = json.load(fh)
        for key in ServiceConfig.__dataclass_fields__:
            if key in raw:
                values[key] = raw[key]
    for env_key, (field_name, cast) in _ENV_FIELDS.items():
        raw_val = env.get(ENV_PREFIX + env_key)
        if raw_val is not None:
            values[field_name] = cast(raw_val)
    return ServiceConfig(**values)


class JobRequest(BaseModel):
    video_id: str
    kind: str
    params: dict = {}


def _validated_params(params):
    """Normalize and range-check highlighter parameters; returns a new dict."""
    out = {
        "threshold": float(params.get("threshold", hl.DEFAULT_THRESHOLD)),
        "stride_frames": int(params.get("stride_frames", hl.DEFAULT_STRIDE)),
        "max_gap_sec": float(params.get("max_gap_sec", hl.DEFAULT_MAX_GAP_SEC)),
        "min_len_sec": float(params.get("min_len_sec", hl.DEFAULT_MIN_LEN_SEC)),
    }
    if not 0.0 <= out["threshold"] <= 1.0:
        raise ValueError(f"threshold {out['threshold']} outside [0, 1]")
    if out["stride_frames"] < 1:
        raise ValueError("stride_frames must be >= 1")
    if out["max_gap_sec"] < 0 or out["min_len_sec"] < 0:
        raise ValueError("gap/length parameters must be nonnegative")
    if "segments" in params:
        segs = params["segments"]
        prev_end = -float("inf")
        for seg in segs:
            start, end = float(seg["start_sec"]), float(seg["end_sec"])
            if end <= start:
                raise ValueError(f"segment [{start}, {end}) is empty or reversed")
            if start < prev_end:
                raise ValueError(f"segment at {start} overlaps the previous one")
            prev_end = end
        out["segments"] = [
            {
                "start_sec": float(s["start_sec"]),
                "end_sec": float(s["end_sec"]),
                "mean_score": float(s.get("mean_score", 1.0)),
                "peak_score": float(s.get("peak_score", 1.0)),
            }
            for s in segs
        ]
    return out


class ServiceState:
    def __init__(self, config):
        self.config = config
        os.makedirs(config.storage_dir, exist_ok=True)
        self.video_dir = os.path.join(config.storage_dir, "videos")
        self.artifact_dir = os.path.join(config.storage_dir, "artifacts")
        os.makedirs(self.video_dir, exist_ok=True)
        os.makedirs(self.artifact_dir, exist_ok=True)
        self.store = JobStore(config.storage_dir)
        self.params = None
        self.model_config = None
        self.checkpoint_id = ""
        if config.checkpoint_path and os.path.isfile(config.checkpoint_path):
            self.params, self.model_config = load_checkpoint(config.checkpoint_path)
            self.checkpoint_id = checkpoint_id(config.checkpoint_path)
        self.pool = WorkerPool(self.store, self._run_job, workers=config.workers)

    @property
    def checkpoint_loaded(self):
        return self.params is not None

    def video_path(self, video_id):
        for fname in os.listdir(self.video_dir):
            stem, ext = os.path.splitext(fname)
            if stem == video_id and ext != ".json":
                return os.path.join(self.video_dir, fname)
        return None

    def _run_job(self, job):
        if not self.checkpoint_loaded:
            raise ClipforgeError("no checkpoint loaded")
        source = self.video_path(job.video_id)
        if source is None:
            raise ClipforgeError(f"video {job.video_id} vanished from storage")
        out_dir = os.path.join(self.artifact_dir, job.id)
        os.makedirs(out_dir, exist_ok=True)
        params = job.params
        artifacts = {}

        if "segments" in params:
            scores = None
            segments = [
                hl.Segment(s["start_sec"], s["end_sec"], s["mean_score"], s["peak_score"])
                for s in params["segments"]
            ]
            plan = hl.HighlightPlan(
                source_id=job.video_id,
                threshold=params["threshold"],
                stride_frames=params["stride_frames"],
                max_gap_sec=params["max_gap_sec"],
                min_len_sec=params["min_len_sec"],
                segments=segments,
                checkpoint_id=self.checkpoint_id,
            )
        else:
            meta = probe_video(source)
            scores = hl.score_video(
                source, self.params, self.model_config,
                stride_frames=params["stride_frames"], meta=meta,
            )
            scores_path = os.path.join(out_dir, "scores.json")
            with open(scores_path, "w") as fh:
                json.dump(
                    {
                        "video_id": job.video_id,
                        "duration_sec": meta.duration_sec,
                        "checkpoint_id": self.checkpoint_id,
                        "stride_frames": params["stride_frames"],
                        "scores": [
                            {
                                "start_frame": s.start_frame,
                                "end_frame": s.end_frame,
                                "start_sec": s.start_sec,
                                "end_sec": s.end_sec,
                                "p_violence": s.p_violence,
                            }
                            for s in scores
                        ],
                    },
                    fh,
                )
            artifacts["scores"] = scores_path
            plan = hl.build_plan(
                source_id=job.video_id,
                scores=scores,
                threshold=params["threshold"],
                stride_frames=params["stride_frames"],
                max_gap_sec=params["max_gap_sec"],
                min_len_sec=params["min_len_sec"],
                checkpoint_id=self.checkpoint_id,
            )

        if job.kind == "highlight":
            plan_path = os.path.join(out_dir, "plan.json")
            hl.export_plan(plan, plan_path)
            artifacts["plan"] = plan_path
            if plan.segments:
                # uploads are content-addressed, so video_id == file_id(source)
                video_path = os.path.join(out_dir, "highlight.avi")
                hl.render_highlight(plan, source, video_path)
                artifacts["video"] = video_path
        return artifacts


def create_app(config=None):
    config = config or load_service_config()
    state = ServiceState(config)

    @asynccontextmanager
    async def lifespan(app):
        state.store.recover()
        state.pool.start()
        yield
        state.pool.stop()

    app = FastAPI(title="clipforge", lifespan=lifespan)
    app.state.clipforge = state

    @app.post("/videos")
    async def upload_video(file: UploadFile):
        suffix = os.path.splitext(file.filename or "upload.bin")[1] or ".bin"
        fd, tmp_path = tempfile.mkstemp(suffix=suffix, dir=state.video_dir)
        received = 0
        try:
            with os.fdopen(fd, "wb") as out:
                while True:
                    chunk = await file.read(1 << 20)
                    if not chunk:
                        break
                    received += len(chunk)
                    if received > config.max_upload_bytes:
                        raise HTTPException(413, detail="upload exceeds size limit")
                    out.write(chunk)
            try:
                meta = probe_video(tmp_path)
            except (DecodeError, EmptyVideo) as exc:
                raise HTTPException(400, detail=str(exc))
            video_id = meta.source_id
            final = os.path.join(state.video_dir, f"{video_id}{suffix}")
            os.replace(tmp_path, final)
            tmp_path = None
            meta_doc = {
                "video_id": video_id,
                "duration_sec": meta.duration_sec,
                "frame_count": meta.frame_count,
                "fps": meta.fps,
                "width": meta.width,
                "height": meta.height,
            }
            with open(os.path.join(state.video_dir, f"{video_id}.json"), "w") as fh:
                json.dump(meta_doc, fh)
            return meta_doc
        finally:
            if tmp_path and os.path.exists(tmp_path):
                os.unlink(tmp_path)

    @app.post("/jobs")
    def create_job(req: JobRequest):
        if req.kind not in JOB_KINDS:
            raise HTTPException(400, detail=f"kind must be one of {JOB_KINDS}")
        if state.video_path(req.video_id) is None:
            raise HTTPException(404, detail=f"unknown video {req.video_id}")
        try:
            params = _validated_params(req.params)
        except (ValueError, KeyError, TypeError) as exc:
            raise HTTPException(400, detail=f"invalid params: {exc}")
        job = state.store.create(req.kind, req.video_id, params)
        state.pool.submit(job.id)
        return {"job_id": job.id}

    def _job_or_404(job_id):
        job = state.store.get(job_id)
        if job is None:
            raise HTTPException(404, detail=f"unknown job {job_id}")
        return job

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        return _job_or_404(job_id).to_dict()

    def _artifact(job_id, name, media_type):
        job = _job_or_404(job_id)
        if job.state != "done":
            raise HTTPException(409, detail=f"job is {job.state}, artifacts need state done")
        path = job.artifacts.get(name)
        if not path or not os.path.exists(path):
            raise HTTPException(404, detail=f"job has no {name} artifact")
        return FileResponse(path, media_type=media_type)

    @app.get("/jobs/{job_id}/scores")
    def get_scores(job_id: str):
        return _artifact(job_id, "scores", "application/json")

    @app.get("/jobs/{job_id}/plan")
    def get_plan(job_id: str):
        return _artifact(job_id, "plan", "application/json")

    @app.get("/jobs/{job_id}/video")
    def get_video(job_id: str):
        return _artifact(job_id, "video", "video/x-msvideo")

    @app.get("/healthz")
    def healthz():
        return JSONResponse(
            {
                "status": "ok" if state.checkpoint_loaded else "degraded",
                "checkpoint_loaded": state.checkpoint_loaded,
            }
        )

    return app


def serve(config):
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host="0.0.0.0", port=config.port, log_level="info")
