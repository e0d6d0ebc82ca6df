"""Versioned binary model checkpoints.

Layout: magic bytes ``PQM1``, a little-endian uint32 header length, a
JSON header (version, model_id, layer manifest), then the raw float64
little-endian parameter arrays in manifest order.  The model_id is a
SHA-256 digest of the parameter bytes, so load_model can verify
integrity end-to-end.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .cnn import MicroCnn
from .errors import CorruptHeader, UnsupportedFormat

MAGIC = b"PQM1"
FORMAT_VERSION = 1


def model_id(model: MicroCnn) -> str:
    """Content digest of the parameters: "sha256:" + first 16 hex chars."""
    h = hashlib.sha256()
    for name, _ in MicroCnn.LAYOUT:
        h.update(getattr(model, name).astype("<f8").tobytes())
    return "sha256:" + h.hexdigest()[:16]


def save_model(path: str | Path, model: MicroCnn) -> None:
    header = {
        "version": FORMAT_VERSION,
        "model_id": model_id(model),
        "layers": [{"name": name, "shape": list(shape)} for name, shape in MicroCnn.LAYOUT],
        "dtype": "<f8",
    }
    blob = json.dumps(header, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name, _ in MicroCnn.LAYOUT:
            fh.write(getattr(model, name).astype("<f8").tobytes())


def load_model(path: str | Path) -> MicroCnn:
    """Read a checkpoint, verifying magic, manifest, sizes, and digest."""
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise CorruptHeader(f"{Path(path).name}: not a PQM1 checkpoint")
    (header_len,) = struct.unpack("<I", raw[4:8])
    if len(raw) < 8 + header_len:
        raise CorruptHeader("truncated checkpoint header")
    try:
        header = json.loads(raw[8 : 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptHeader(f"unreadable checkpoint header: {exc}") from exc
    if header.get("version") != FORMAT_VERSION:
        raise UnsupportedFormat(f"checkpoint version {header.get('version')!r} not supported")

    declared = [(layer["name"], tuple(layer["shape"])) for layer in header.get("layers", [])]
    if declared != [(n, tuple(s)) for n, s in MicroCnn.LAYOUT]:
        raise CorruptHeader("checkpoint layer manifest does not match the model layout")

    params = {}
    offset = 8 + header_len
    for name, shape in MicroCnn.LAYOUT:
        nbytes = int(np.prod(shape)) * 8
        chunk = raw[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise CorruptHeader(f"truncated parameter data at {name}")
        params[name] = np.frombuffer(chunk, dtype="<f8").reshape(shape).copy()
        offset += nbytes
    if offset != len(raw):
        raise CorruptHeader(f"{len(raw) - offset} unexpected trailing bytes")

    model = MicroCnn(params)
    if model_id(model) != header.get("model_id"):
        raise CorruptHeader("parameter digest does not match the header model_id")
    return model
