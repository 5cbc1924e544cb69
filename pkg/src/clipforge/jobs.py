"""Disk-backed job store and the in-process worker pool.

One JSON file per job under <storage>/jobs. Legal transitions: queued ->
running -> done|failed, plus queued -> failed for jobs interrupted before a
worker picked them up (restart recovery). States never reverse and `done`
is only reachable from `running`.
"""

import json
import os
import queue
import threading
import time
import uuid
from dataclasses import asdict, dataclass, field

TERMINAL = {"done", "failed"}
LEGAL = {
    "queued": {"running", "failed"},
    "running": {"done", "failed"},
    "done": set(),
    "failed": set(),
}

JOB_KINDS = ("score", "highlight")


@dataclass
class Job:
    id: str
    kind: str
    video_id: str
    params: dict = field(default_factory=dict)
    state: str = "queued"
    error: str = None
    artifacts: dict = field(default_factory=dict)
    created_at: float = 0.0
    started_at: float = None
    finished_at: float = None
    state_history: list = field(default_factory=lambda: ["queued"])

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def new_job_id():
    return uuid.uuid4().hex[:12]


class JobStore:
    def __init__(self, root):
        self.dir = os.path.join(root, "jobs")
        os.makedirs(self.dir, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, job_id):
        return os.path.join(self.dir, f"{job_id}.json")

    def _write(self, job):
        tmp = self._path(job.id) + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(job.to_dict(), fh, indent=2)
        os.replace(tmp, self._path(job.id))

    def create(self, kind, video_id, params):
        job = Job(
            id=new_job_id(),
            kind=kind,
            video_id=video_id,
            params=params,
            created_at=time.time(),
        )
        with self._lock:
            self._write(job)
        return job

    def get(self, job_id):
        path = self._path(job_id)
        if not os.path.exists(path):
            return None
        with open(path) as fh:
            return Job.from_dict(json.load(fh))

    def list_ids(self):
        return sorted(
            os.path.splitext(f)[0] for f in os.listdir(self.dir) if f.endswith(".json")
        )

    def transition(self, job_id, new_state, error=None, artifacts=None):
        with self._lock:
            job = self.get(job_id)
            if job is None:
                raise KeyError(f"unknown job {job_id}")
            if new_state not in LEGAL[job.state]:
                raise RuntimeError(f"illegal transition {job.state} -> {new_state}")
            job.state = new_state
            job.state_history.append(new_state)
            if new_state == "running":
                job.started_at = time.time()
            if new_state in TERMINAL:
                job.finished_at = time.time()
            if error is not None:
                job.error = error
            if artifacts:
                job.artifacts.update(artifacts)
            self._write(job)
            return job

    def recover(self):
        """Mark every non-terminal job failed; call once on startup."""
        for job_id in self.list_ids():
            job = self.get(job_id)
            if job.state not in TERMINAL:
                self.transition(job_id, "failed", error="interrupted by service restart")


class WorkerPool:
    """Threads pulling job ids off a queue and running them through `runner`.

    runner(job) returns an artifacts dict; exceptions mark the job failed
    with the exception text.
    """

    def __init__(self, store, runner, workers=1):
        self.store = store
        self.runner = runner
        self.queue = queue.Queue()
        self.threads = [
            threading.Thread(target=self._loop, name=f"clipforge-worker-{i}", daemon=True)
            for i in range(max(1, workers))
        ]

    def start(self):
        for t in self.threads:
            t.start()

    def submit(self, job_id):
        self.queue.put(job_id)

    def stop(self, timeout=10.0):
        for _ in self.threads:
            self.queue.put(None)
        for t in self.threads:
            t.join(timeout=timeout)

    def _loop(self):
        while True:
            job_id = self.queue.get()
            if job_id is None:
                return
            job = self.store.get(job_id)
            if job is None or job.state != "queued":
                continue
            self.store.transition(job_id, "running")
            try:
                artifacts = self.runner(self.store.get(job_id))
            except Exception as exc:  # propagate worker crashes into job state
                self.store.transition(job_id, "failed", error=f"{type(exc).__name__}: {exc}")
            else:
                self.store.transition(job_id, "done", artifacts=artifacts)
