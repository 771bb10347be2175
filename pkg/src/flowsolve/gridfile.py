"""Reader and writer for ``FLOWGRID`` tabulated velocity fields.

Layout (little-endian)::

    offset 0   8 bytes   magic b"FLOWGRID"
    offset 8   uint32    header length L in bytes
    offset 12  L bytes   UTF-8 JSON object:
                         dim (1|2), x_min, x_max, x_points, t_min, t_max, t_points
                         (x_* are scalars or lists with one entry per dimension)
    offset 12+L          float32 payload, row-major over
                         (t_points, x_points[0], ..., x_points[dim-1], dim)
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .core import FlowSolveError
from .fields import GridField

__all__ = ["MAGIC", "GridFormatError", "load_grid_field", "save_grid_field"]

MAGIC = b"FLOWGRID"
_LEN = struct.Struct("<I")
_KEYS = ("dim", "x_min", "x_max", "x_points", "t_min", "t_max", "t_points")


class GridFormatError(FlowSolveError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def _per_dim(header: dict, key: str, dim: int, offset: int) -> list:
    val = header[key]
    vals = list(val) if isinstance(val, (list, tuple)) else [val] * dim
    if len(vals) != dim:
        raise GridFormatError(f"header key {key!r} needs {dim} entries, got {len(vals)}", offset)
    return vals


def load_grid_field(path) -> GridField:
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise GridFormatError("bad magic, expected b'FLOWGRID'", 0)
    if len(data) < 12:
        raise GridFormatError("truncated header length", 8)
    (hlen,) = _LEN.unpack_from(data, 8)
    hstart = 12
    if len(data) < hstart + hlen:
        raise GridFormatError(f"header length {hlen} runs past end of file", 8)
    try:
        header = json.loads(data[hstart : hstart + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise GridFormatError(f"header is not UTF-8 JSON: {exc}", hstart) from None
    if not isinstance(header, dict):
        raise GridFormatError("header must be a JSON object", hstart)
    missing = [k for k in _KEYS if k not in header]
    if missing:
        raise GridFormatError(f"header missing keys {missing}", hstart)
    dim = header["dim"]
    if dim not in (1, 2):
        raise GridFormatError(f"dim must be 1 or 2, got {dim!r}", hstart)
    try:
        x_min = [float(v) for v in _per_dim(header, "x_min", dim, hstart)]
        x_max = [float(v) for v in _per_dim(header, "x_max", dim, hstart)]
        x_points = [int(v) for v in _per_dim(header, "x_points", dim, hstart)]
        t_min, t_max, t_points = float(header["t_min"]), float(header["t_max"]), int(header["t_points"])
    except (TypeError, ValueError) as exc:
        raise GridFormatError(f"bad header value: {exc}", hstart) from None
    if min(x_points + [t_points]) < 2:
        raise GridFormatError("every axis needs at least 2 points", hstart)

    pstart = hstart + hlen
    shape = (t_points, *x_points, dim)
    expected = int(np.prod(shape)) * 4
    got = len(data) - pstart
    if got != expected:
        raise GridFormatError(f"payload is {got} bytes, header implies {expected}", pstart)
    values = np.frombuffer(data, dtype="<f4", offset=pstart).reshape(shape)
    bad = np.flatnonzero(~np.isfinite(values.ravel()))
    if bad.size:
        raise GridFormatError("non-finite value in payload", pstart + 4 * int(bad[0]))
    try:
        return GridField(x_min, x_max, x_points, t_min, t_max, t_points, values.astype(np.float64))
    except ValueError as exc:
        raise GridFormatError(str(exc), hstart) from None


def save_grid_field(path, values, x_min, x_max, t_min: float, t_max: float) -> Path:
    """Write ``values`` of shape ``(t_points, *x_points, dim)``."""
    values = np.asarray(values, dtype="<f4")
    dim = values.shape[-1]
    header = {
        "dim": int(dim),
        "x_min": np.broadcast_to(x_min, (dim,)).astype(float).tolist(),
        "x_max": np.broadcast_to(x_max, (dim,)).astype(float).tolist(),
        "x_points": list(values.shape[1:-1]),
        "t_min": float(t_min),
        "t_max": float(t_max),
        "t_points": int(values.shape[0]),
    }
    hbytes = json.dumps(header).encode("utf-8")
    path = Path(path)
    path.write_bytes(MAGIC + _LEN.pack(len(hbytes)) + hbytes + values.tobytes(order="C"))
    return path
