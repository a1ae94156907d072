"""Parameter checkpoints: a JSON manifest of float32 buffers.

Each entry is ``{"name", "shape", "values"}`` with values stored row-major.
float32 values survive the JSON round trip bit-exactly because Python's
shortest-repr float serialization is lossless for doubles, and every
float32 is exactly representable as a double. Saving, loading, and saving
again therefore yields byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .exceptions import ParseError

FORMAT_NAME = "wavets.checkpoint"
FORMAT_VERSION = 1


def _buffer(value) -> np.ndarray:
    # np.ascontiguousarray would promote 0-d scalars to 1-d; asarray keeps rank.
    data = value.data if isinstance(value, Tensor) else np.asarray(value)
    return np.asarray(data, dtype=np.float32)


def save_params(params: dict[str, Tensor | np.ndarray], path: str | Path) -> None:
    """Write parameters to ``path``, sorted by name for stable bytes."""
    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "params": [
            {
                "name": name,
                "shape": list(_buffer(params[name]).shape),
                "values": [float(x) for x in _buffer(params[name]).ravel()],
            }
            for name in sorted(params)
        ],
    }
    Path(path).write_text(json.dumps(manifest, indent=1) + "\n")


def load_params(path: str | Path) -> dict[str, np.ndarray]:
    """Read a checkpoint back as float32 arrays keyed by parameter name."""
    try:
        manifest = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid checkpoint file {path}: {exc}") from exc
    if manifest.get("format") != FORMAT_NAME:
        raise ParseError(f"{path} is not a {FORMAT_NAME} file")
    out: dict[str, np.ndarray] = {}
    for entry in manifest["params"]:
        values = np.asarray(entry["values"], dtype=np.float32)
        expected = int(np.prod(entry["shape"])) if entry["shape"] else 1
        if values.size != expected:
            raise ParseError(
                f"parameter {entry['name']!r}: {values.size} values for shape {entry['shape']}"
            )
        out[entry["name"]] = values.reshape(entry["shape"])
    return out
