"""Snapshot files, trajectory CSV, and atomic writes.

Snapshot format: a 32-byte header (magic "BSVF", version u32, d u32, N u32,
kind u32 with 0 = real and 1 = spectral, 12 reserved bytes) followed by
little-endian f64 payload in row-major order; spectral payloads interleave
re/im. Round trips are bit-exact.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile

import numpy as np

from .dyadic import Trajectory
from .fields import FieldError, Grid, RealField, SpectralField

MAGIC = b"BSVF"
VERSION = 1
KIND_REAL = 0
KIND_SPECTRAL = 1
_HEADER = struct.Struct("<4sIIII12x")
assert _HEADER.size == 32


def atomic_write_bytes(path, data: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def dump_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def save_field(path, field) -> None:
    if isinstance(field, RealField):
        kind = KIND_REAL
        payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    elif isinstance(field, SpectralField):
        kind = KIND_SPECTRAL
        payload = np.ascontiguousarray(field.coeffs, dtype="<c16").tobytes()
    else:
        raise FieldError(f"cannot save object of type {type(field).__name__}")
    header = _HEADER.pack(MAGIC, VERSION, field.grid.d, field.grid.n, kind)
    atomic_write_bytes(path, header + payload)


def load_field(path):
    with open(path, "rb") as handle:
        raw = handle.read()
    if len(raw) < _HEADER.size:
        raise FieldError(f"{path}: truncated snapshot header")
    magic, version, d, n, kind = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FieldError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FieldError(f"{path}: unsupported version {version}")
    grid = Grid(int(d), int(n))
    body = raw[_HEADER.size:]
    count = n**d
    if kind == KIND_REAL:
        if len(body) != 8 * count:
            raise FieldError(f"{path}: payload size mismatch")
        values = np.frombuffer(body, dtype="<f8").reshape(grid.shape)
        return RealField(grid, values.copy())
    if kind == KIND_SPECTRAL:
        if len(body) != 16 * count:
            raise FieldError(f"{path}: payload size mismatch")
        coeffs = np.frombuffer(body, dtype="<c16").reshape(grid.shape)
        return SpectralField(grid, coeffs.copy())
    raise FieldError(f"{path}: unknown kind {kind}")


def _p_label(p: float) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


def trajectory_csv(traj: Trajectory) -> str:
    """Per-shell records as CSV with columns (t, j, p, norm)."""
    lines = ["t,j,p,norm"]
    for i, t in enumerate(traj.times):
        for p in traj.p_list:
            rec = traj.shell_norms[float(p)]
            for col, j in enumerate(traj.shells()):
                lines.append(f"{t:.17g},{j},{_p_label(float(p))},{rec[i, col]:.17g}")
    return "\n".join(lines) + "\n"


def shell_norms_csv(decomp, f, p_list) -> str:
    """One-field variant of the trajectory CSV (t = 0 rows)."""
    lines = ["t,j,p,norm"]
    for p in p_list:
        norms = decomp.shell_norms(f, p)
        for col, j in enumerate(decomp.shells()):
            lines.append(f"0,{j},{_p_label(float(p))},{norms[col]:.17g}")
    return "\n".join(lines) + "\n"
