"""Checkpoint serialization.

Layout: magic "CKPT", u32 version, length-prefixed config JSON, u32 tensor
count, then per tensor: length-prefixed name, u32 ndim, u32 dims, u8 trainable
flag, row-major little-endian float32 payload.
"""

import hashlib
import json
import struct

import numpy as np

from ..errors import BadMagic, ShapeMismatch, TruncatedPayload, VersionMismatch
from .config import ModelConfig
from .params import ModelParams, param_shapes

MAGIC = b"CKPT"
VERSION = 1


def save_checkpoint(params, config, path):
    """Write params (cast to float32) and a config echo. Returns the path."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        blob = json.dumps(config.to_dict()).encode()
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(params.tensors)))
        for name, arr in params.tensors.items():
            nb = name.encode()
            fh.write(struct.pack("<I", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(struct.pack("<B", 1 if params.trainable[name] else 0))
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return path


def _read(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise TruncatedPayload(f"checkpoint ended while reading {what}")
    return buf


def load_checkpoint(path, expected_config=None):
    """Read (ModelParams, ModelConfig); validates shapes against expected_config."""
    with open(path, "rb") as fh:
        if _read(fh, 4, "magic") != MAGIC:
            raise BadMagic(f"{path} is not a clipforge checkpoint")
        (version,) = struct.unpack("<I", _read(fh, 4, "version"))
        if version != VERSION:
            raise VersionMismatch(f"checkpoint version {version}, expected {VERSION}")
        (blob_len,) = struct.unpack("<I", _read(fh, 4, "config length"))
        config = ModelConfig.from_dict(json.loads(_read(fh, blob_len, "config")))
        (count,) = struct.unpack("<I", _read(fh, 4, "tensor count"))
        tensors, trainable = {}, {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", _read(fh, 4, "name length"))
            name = _read(fh, name_len, "name").decode()
            (ndim,) = struct.unpack("<I", _read(fh, 4, "ndim"))
            shape = struct.unpack(f"<{ndim}I", _read(fh, 4 * ndim, "shape"))
            (flag,) = struct.unpack("<B", _read(fh, 1, "trainable flag"))
            n = int(np.prod(shape)) if shape else 1
            raw = _read(fh, 4 * n, f"tensor {name!r}")
            tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
            trainable[name] = bool(flag)
    params = ModelParams(tensors, trainable)
    check = expected_config if expected_config is not None else config
    expected = param_shapes(check)
    missing = [n for n in expected if n not in tensors]
    if missing:
        raise ShapeMismatch(f"checkpoint missing tensor {missing[0]!r}")
    extra = [n for n in tensors if n not in expected]
    if extra:
        raise ShapeMismatch(f"checkpoint has unexpected tensor {extra[0]!r}")
    for name, (shape, _) in expected.items():
        if tensors[name].shape != shape:
            raise ShapeMismatch(
                f"tensor {name!r} has shape {tensors[name].shape}, config expects {shape}"
            )
    return params, config


def checkpoint_id(path):
    """Short content hash identifying a checkpoint file."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()[:16]
