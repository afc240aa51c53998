"""Parameter serialization: a (name, shape) manifest plus one flat
little-endian float64 blob. Round trips are bit-exact."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import FormatError, IoError

_MANIFEST = "params.json"
_BLOB = "params.f64"


def save_params(params: dict[str, np.ndarray], path: str | Path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    blob = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in params.values())
    manifest = {
        "entries": [{"name": k, "shape": list(a.shape)} for k, a in params.items()],
        "checksum": hashlib.sha256(blob).hexdigest(),
    }
    (path / _BLOB).write_bytes(blob)
    (path / _MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n")


def load_params(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    manifest_path = path / _MANIFEST
    blob_path = path / _BLOB
    if not manifest_path.is_file() or not blob_path.is_file():
        raise IoError(f"missing parameter files under {path}")
    manifest = json.loads(manifest_path.read_text())
    blob = blob_path.read_bytes()
    if hashlib.sha256(blob).hexdigest() != manifest["checksum"]:
        raise FormatError(f"{_BLOB}: checksum mismatch")
    params: dict[str, np.ndarray] = {}
    offset = 0
    for entry in manifest["entries"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        end = offset + 8 * count
        if end > len(blob):
            raise FormatError(f"{_BLOB}: blob too short for {entry['name']}")
        params[entry["name"]] = (
            np.frombuffer(blob[offset:end], dtype="<f8").reshape(entry["shape"]).copy()
        )
        offset = end
    if offset != len(blob):
        raise FormatError(f"{_BLOB}: {len(blob) - offset} trailing bytes")
    return params
