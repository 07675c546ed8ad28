"""Binary field checkpoints.

Layout (little-endian throughout):

    offset  size  field
    0       4     magic "SNLS"
    4       4     format_version (u32, currently 1)
    8       8     n_points (u64)
    16      8     length (f64)
    24      8     time (f64)
    32      16*N  payload: N interleaved (re, im) f64 pairs

Write -> read -> write round-trips bit-identically.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .grid import ComplexField, Grid

__all__ = ["Checkpoint", "write_checkpoint", "read_checkpoint"]

MAGIC = b"SNLS"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQdd")


@dataclass(frozen=True, eq=False)
class Checkpoint:
    n_points: int
    length: float
    time: float
    values: np.ndarray

    def to_field(self) -> ComplexField:
        return ComplexField(Grid(self.n_points, self.length), self.values)


def write_checkpoint(path, field: ComplexField, time: float) -> None:
    grid = field.grid
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, grid.n_points, grid.length, float(time))
    interleaved = np.empty(2 * grid.n_points, dtype="<f8")
    interleaved[0::2] = field.values.real
    interleaved[1::2] = field.values.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(interleaved.tobytes())


def read_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise ParameterError(f"{path}: truncated checkpoint header")
        magic, version, n_points, length, time = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise ParameterError(f"{path}: bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise ParameterError(f"{path}: unsupported format version {version}")
        payload = fh.read()
    expected = 16 * n_points
    if len(payload) != expected:
        raise ParameterError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    flat = np.frombuffer(payload, dtype="<f8")
    values = flat[0::2] + 1j * flat[1::2]
    return Checkpoint(n_points=int(n_points), length=length, time=time, values=values)
