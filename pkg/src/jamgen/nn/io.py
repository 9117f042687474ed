"""AWNN weight container.

Layout: magic "AWNN" | u32 LE format version | u64 LE header length |
JSON header (layer specs, tensor names/shapes/offsets, tag, extra) |
raw little-endian f32 tensor payloads in header order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError, ShapeMismatchError
from .layers import Model, layer_from_spec

MAGIC = b"AWNN"
FORMAT_VERSION = 1


def _write_container(path, header: dict, values: dict):
    tensors = []
    payload = bytearray()
    for name, value in values.items():
        data = np.ascontiguousarray(value, dtype="<f4").tobytes()
        tensors.append({"name": name, "shape": list(np.shape(value)),
                        "offset": len(payload)})
        payload += data
    header = {**header, "tensors": tensors}
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        f.write(bytes(payload))


def save_model(model: Model, path, tag: str = "model", extra: dict | None = None):
    _write_container(path, {"tag": tag,
                            "input_shape": list(model.input_shape),
                            "layers": model.specs(),
                            "extra": extra or {}},
                     model.parameters())


def save_tensors(path, tag: str, values: dict, extra: dict | None = None):
    """Store raw named f32 arrays (no graph) in the same container."""
    _write_container(path, {"tag": tag, "layers": [], "extra": extra or {}}, values)


def load_tensors(path, expect_tag: str | None = None) -> tuple[dict, dict]:
    path = Path(path)
    with open(path, "rb") as f:
        header = _read_header(f, path)
        values = _read_tensors(f, header, path)
    if expect_tag is not None and header.get("tag") != expect_tag:
        raise ModelFormatError("shape-mismatch",
                               f"{path}: tag {header.get('tag')!r}, wanted {expect_tag!r}")
    return values, header


def _read_header(f, path):
    magic = f.read(4)
    if magic != MAGIC:
        raise ModelFormatError("bad-magic", str(path))
    raw = f.read(12)
    if len(raw) < 12:
        raise ModelFormatError("truncated", str(path))
    version, = struct.unpack("<I", raw[:4])
    if version != FORMAT_VERSION:
        raise ModelFormatError("version-mismatch", f"{path}: version {version}")
    hlen, = struct.unpack("<Q", raw[4:])
    blob = f.read(hlen)
    if len(blob) < hlen:
        raise ModelFormatError("truncated", str(path))
    try:
        return json.loads(blob)
    except json.JSONDecodeError as e:
        raise ModelFormatError("truncated", f"{path}: bad header ({e})") from None


def load_header(path) -> dict:
    with open(path, "rb") as f:
        return _read_header(f, path)


def _read_tensors(f, header, path):
    values = {}
    for t in header["tensors"]:
        count = int(np.prod(t["shape"])) if t["shape"] else 1
        data = f.read(4 * count)
        if len(data) < 4 * count:
            raise ModelFormatError("truncated", f"{path}: tensor {t['name']}")
        values[t["name"]] = np.frombuffer(data, dtype="<f4").reshape(t["shape"]).copy()
    return values


def load_model(path, expect_tag: str | None = None) -> tuple[Model, dict]:
    """Rebuild the graph from its stored specs and load weights bit-exactly."""
    path = Path(path)
    with open(path, "rb") as f:
        header = _read_header(f, path)
        values = _read_tensors(f, header, path)
    if expect_tag is not None and header.get("tag") != expect_tag:
        raise ModelFormatError("shape-mismatch",
                               f"{path}: tag {header.get('tag')!r}, wanted {expect_tag!r}")
    model = Model([layer_from_spec(s) for s in header["layers"]],
                  tuple(header["input_shape"]))
    model.set_parameters(values)
    return model, header


def load_into(model: Model, path) -> dict:
    """Load weights into an existing graph; shapes must match exactly."""
    path = Path(path)
    with open(path, "rb") as f:
        header = _read_header(f, path)
        values = _read_tensors(f, header, path)
    params = model.parameters()
    if set(values) != set(params) or any(
            values[k].shape != params[k].shape for k in params):
        raise ModelFormatError("shape-mismatch", str(path))
    try:
        model.set_parameters(values)
    except ShapeMismatchError as e:
        raise ModelFormatError("shape-mismatch", str(e)) from None
    return header
