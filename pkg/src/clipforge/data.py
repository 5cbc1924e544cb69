"""Dataset manifests, the stratified 72/8/20 split, and the clip archive.

The split shuffle is a self-contained SplitMix64-driven Fisher-Yates so the
same (manifest, seed) yields the same assignment on any platform or numpy
version. The archive is a flat binary format: "CLPA" magic, version, count,
shape, one byte per label, then row-major little-endian float32 tensors.
"""

import json
import os
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    EmptyClassDir,
    MissingClassDir,
    TooFewSamples,
    TruncatedPayload,
    VersionMismatch,
)
from .labels import CLASSES_LIST
from .media import CLIP_LEN, FRAME_SIZE, VIDEO_EXTENSIONS, sample_clip_uniform

DEFAULT_FRACTIONS = (0.72, 0.08, 0.20)
SPLIT_NAMES = ("train", "val", "test")

ARCHIVE_MAGIC = b"CLPA"
ARCHIVE_VERSION = 1
CLIP_SHAPE = (CLIP_LEN, FRAME_SIZE, FRAME_SIZE, 3)


@dataclass
class ManifestEntry:
    clip_id: str
    path: str
    class_index: int
    class_name: str
    split: str = None


@dataclass
class DatasetManifest:
    entries: list = field(default_factory=list)
    seed: int = None
    skipped: list = field(default_factory=list)

    def by_split(self, name):
        return [e for e in self.entries if e.split == name]

    def class_entries(self, class_index):
        return [e for e in self.entries if e.class_index == class_index]

    def save(self, path):
        with open(path, "w") as fh:
            header = {"format": "clipforge-manifest", "version": 1, "seed": self.seed, "skipped": self.skipped}
            fh.write(json.dumps(header) + "\n")
            for e in self.entries:
                fh.write(json.dumps(asdict(e)) + "\n")
        return path

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
        header = json.loads(lines[0])
        entries = [ManifestEntry(**json.loads(ln)) for ln in lines[1:]]
        return cls(entries=entries, seed=header.get("seed"), skipped=header.get("skipped", []))


def build_manifest(root):
    """Scan a class-per-folder tree into a manifest; non-video files are skipped."""
    root = os.fspath(root)
    entries, skipped = [], []
    for class_index, class_name in enumerate(CLASSES_LIST):
        class_dir = os.path.join(root, class_name)
        if not os.path.isdir(class_dir):
            raise MissingClassDir(f"missing class directory {class_dir}")
        usable = 0
        for fname in sorted(os.listdir(class_dir)):
            path = os.path.join(class_dir, fname)
            if not os.path.isfile(path):
                continue
            if os.path.splitext(fname)[1].lower() not in VIDEO_EXTENSIONS:
                skipped.append(path)
                continue
            entries.append(
                ManifestEntry(
                    clip_id=f"{class_name}/{fname}",
                    path=path,
                    class_index=class_index,
                    class_name=class_name,
                )
            )
            usable += 1
        if usable == 0:
            raise EmptyClassDir(f"no usable videos under {class_dir}")
    return DatasetManifest(entries=entries, skipped=skipped)


_M64 = (1 << 64) - 1


def _splitmix64(state):
    state = (state + 0x9E3779B97F4A7C15) & _M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return state, (z ^ (z >> 31))


def seeded_shuffle(items, seed):
    """Fisher-Yates driven by SplitMix64; platform-independent by construction."""
    out = list(items)
    state = seed & _M64
    for i in range(len(out) - 1, 0, -1):
        state, r = _splitmix64(state)
        j = r % (i + 1)
        out[i], out[j] = out[j], out[i]
    return out


def split_manifest(manifest, fractions=DEFAULT_FRACTIONS, seed=0):
    """Assign stratified train/val/test splits; deterministic in (manifest, seed)."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions {fractions} do not sum to 1")
    assigned = {}
    for class_index in range(len(CLASSES_LIST)):
        idx = [i for i, e in enumerate(manifest.entries) if e.class_index == class_index]
        n = len(idx)
        if n < 5:
            raise TooFewSamples(f"class {CLASSES_LIST[class_index]} has {n} clips; need >= 5")
        _, class_seed = _splitmix64((seed & _M64) ^ (0xC2B2AE3D27D4EB4F * (class_index + 1) & _M64))
        shuffled = seeded_shuffle(idx, class_seed)
        n_train = int(fractions[0] * n + 0.5)
        n_val = int(fractions[1] * n + 0.5)
        for pos, i in enumerate(shuffled):
            if pos < n_train:
                assigned[i] = "train"
            elif pos < n_train + n_val:
                assigned[i] = "val"
            else:
                assigned[i] = "test"
    entries = [
        ManifestEntry(e.clip_id, e.path, e.class_index, e.class_name, assigned[i])
        for i, e in enumerate(manifest.entries)
    ]
    return DatasetManifest(entries=entries, seed=seed, skipped=list(manifest.skipped))


# ------------------------------------------------------------------ archive

def write_archive(clips, labels, path):
    """Write clips (iterable of (16,64,64,3) float32 in [0,1]) and labels."""
    labels = [int(x) for x in labels]
    count = len(labels)
    per_clip = int(np.prod(CLIP_SHAPE))
    with open(path, "wb") as fh:
        fh.write(ARCHIVE_MAGIC)
        fh.write(struct.pack("<I", ARCHIVE_VERSION))
        fh.write(struct.pack("<I", count))
        fh.write(struct.pack("<4I", *CLIP_SHAPE))
        fh.write(bytes(labels))
        written = 0
        for clip in clips:
            arr = np.ascontiguousarray(clip, dtype="<f4")
            if arr.shape != CLIP_SHAPE:
                raise ValueError(f"clip shape {arr.shape} != {CLIP_SHAPE}")
            if arr.min() < 0.0 or arr.max() > 1.0:
                raise ValueError("clip values must lie in [0, 1]")
            fh.write(arr.tobytes())
            written += 1
        if written != count:
            raise ValueError(f"{written} clips written but {count} labels given")
    return path


def read_archive(path):
    """Read (clips (N,16,64,64,3) float32, labels (N,) int64) back, bit-exactly."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != ARCHIVE_MAGIC:
            raise BadMagic(f"{path} does not start with {ARCHIVE_MAGIC!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != ARCHIVE_VERSION:
            raise VersionMismatch(f"archive version {version}, expected {ARCHIVE_VERSION}")
        (count,) = struct.unpack("<I", fh.read(4))
        shape = struct.unpack("<4I", fh.read(16))
        if shape != CLIP_SHAPE:
            raise TruncatedPayload(f"archive declares clip shape {shape}, expected {CLIP_SHAPE}")
        label_bytes = fh.read(count)
        if len(label_bytes) != count:
            raise TruncatedPayload("archive ended inside the label table")
        payload = fh.read()
    expected = count * int(np.prod(CLIP_SHAPE)) * 4
    if len(payload) != expected:
        raise TruncatedPayload(
            f"payload is {len(payload)} bytes, header implies {expected}"
        )
    clips = np.frombuffer(payload, dtype="<f4").reshape((count,) + CLIP_SHAPE).copy()
    labels = np.frombuffer(label_bytes, dtype=np.uint8).astype(np.int64)
    return clips, labels


def preprocess_manifest(manifest, archive_path, progress=None):
    """Decode every manifest entry into a clip tensor and write one archive.

    Clip order matches manifest entry order, so split membership indexes the
    archive directly.
    """
    labels = [e.class_index for e in manifest.entries]

    def clips():
        for i, entry in enumerate(manifest.entries):
            clip = sample_clip_uniform(entry.path)
            if progress is not None:
                progress(i + 1, len(manifest.entries))
            yield clip.data

    write_archive(clips(), labels, archive_path)
    return archive_path


def load_split(manifest, archive_path, split):
    """(clips, labels) for one split, in manifest order."""
    clips, labels = read_archive(archive_path)
    idx = [i for i, e in enumerate(manifest.entries) if e.split == split]
    return clips[idx], labels[idx]
