"""Binary field snapshots.

Layout (all little-endian)::

    magic      8 bytes  b"MHDSNAP\\0"
    version    uint32
    dim        uint32
    n          uint32
    L          float64
    components uint32
    time       float64
    data       float64[components, n, ..., n]  (C order, real space)
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .spectral import Grid, SpectralField, fft_forward

MAGIC = b"MHDSNAP\0"
VERSION = 1
_HEADER = struct.Struct("<8sIIIdId")


def write_snapshot(path, field: SpectralField | np.ndarray, time: float, grid: Grid | None = None) -> Path:
    if isinstance(field, SpectralField):
        grid = field.grid
        values = field.real
    else:
        if grid is None:
            raise ValueError("grid is required when writing a raw array")
        values = np.asarray(field, dtype=float)
        if values.shape == grid.shape:
            values = values[None]
    if values.shape[1:] != grid.shape:
        raise ValueError("array does not match grid")
    path = Path(path)
    header = _HEADER.pack(MAGIC, VERSION, grid.dim, grid.n, float(grid.box_length), values.shape[0], float(time))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())
    return path


def read_snapshot(path) -> tuple[Grid, float, np.ndarray]:
    """Return ``(grid, time, values)`` with values shaped ``(components, *grid.shape)``."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated snapshot header")
    magic, version, dim, n, L, comps, time = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError("not a field snapshot (bad magic)")
    if version != VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    grid = Grid(dim, n, L)
    count = comps * n**dim
    data = np.frombuffer(raw, dtype="<f8", count=count, offset=_HEADER.size)
    if data.size != count:
        raise ValueError("truncated snapshot payload")
    return grid, time, data.reshape((comps,) + grid.shape).astype(float)


def load_field(path) -> tuple[SpectralField, float]:
    grid, time, values = read_snapshot(path)
    return fft_forward(values, grid), time
