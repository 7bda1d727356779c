"""Binary snapshot (ASF1) and symbol table (MSY1) files, CSV and JSON writers.

Both binary formats are little-endian. A snapshot file is

    b"ASF1" | u32 version=1 | u32 d | u32 dims[d] | f64 time | f64 kappa
    | f64 epsilon | f64 values[prod(dims)]   (row-major, last axis fastest)

and a symbol file is

    b"MSY1" | u32 version=1 | u32 d | u32 dims[d]
    | for each mode in FFT index order (row-major): d x (f64 re, f64 im)
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Grid
from .operators import MultiplierSymbol, custom_symbol

SNAPSHOT_MAGIC = b"ASF1"
SYMBOL_MAGIC = b"MSY1"
VERSION = 1


class FormatError(ValueError):
    """Malformed or inconsistent binary file."""


@dataclass(frozen=True)
class Snapshot:
    time: float
    values: np.ndarray
    kappa: float = 0.0
    epsilon: float = 0.0

    @property
    def grid(self) -> Grid:
        return Grid(self.values.shape)


def _read_header(buf: bytes, magic: bytes, path) -> tuple[int, tuple[int, ...], int]:
    if len(buf) < 12:
        raise FormatError(f"{path}: truncated header")
    if buf[:4] != magic:
        raise FormatError(f"{path}: bad magic {buf[:4]!r}, expected {magic!r}")
    version, d = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if d not in (2, 3):
        raise FormatError(f"{path}: dimension {d} not in (2, 3)")
    off = 12 + 4 * d
    if len(buf) < off:
        raise FormatError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{d}I", buf, 12)
    return d, tuple(int(n) for n in dims), off


def write_snapshot(path, values, time: float, kappa: float = 0.0, epsilon: float = 0.0) -> None:
    values = np.asarray(values, dtype="<f8")
    if values.ndim not in (2, 3):
        raise ValueError(f"snapshot must be 2-D or 3-D, got ndim={values.ndim}")
    if not np.all(np.isfinite(values)):
        raise ValueError("refusing to write a non-finite snapshot")
    header = SNAPSHOT_MAGIC + struct.pack(
        f"<II{values.ndim}Iddd", VERSION, values.ndim, *values.shape,
        float(time), float(kappa), float(epsilon),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(values).tobytes())


def read_snapshot(path, expect_dims=None) -> Snapshot:
    buf = Path(path).read_bytes()
    d, dims, off = _read_header(buf, SNAPSHOT_MAGIC, path)
    if len(buf) < off + 24:
        raise FormatError(f"{path}: truncated header")
    time, kappa, epsilon = struct.unpack_from("<ddd", buf, off)
    off += 24
    count = math.prod(dims)
    if len(buf) != off + 8 * count:
        raise FormatError(
            f"{path}: truncated payload ({(len(buf) - off) // 8} values, header says {count})"
        )
    if expect_dims is not None and tuple(expect_dims) != dims:
        raise FormatError(f"{path}: dims {dims} do not match expected {tuple(expect_dims)}")
    values = np.frombuffer(buf, dtype="<f8", count=count, offset=off).reshape(dims)
    return Snapshot(time, values.astype(np.float64), kappa, epsilon)


def snapshot_name(index: int) -> str:
    return f"snap_{index:06d}.asf"


def list_snapshots(directory) -> list[Path]:
    paths = sorted(Path(directory).glob("snap_*.asf"))
    if not paths:
        raise FileNotFoundError(f"no snapshot files in {directory}")
    return paths


def read_series(directory, expect_dims=None):
    """All snapshots of a run directory as ``(grid, times, fields, kappa, epsilon)``."""
    snaps = [read_snapshot(p, expect_dims) for p in list_snapshots(directory)]
    dims = snaps[0].values.shape
    if any(s.values.shape != dims for s in snaps):
        raise FormatError(f"{directory}: snapshots on different grids")
    snaps.sort(key=lambda s: s.time)
    return (Grid(dims), np.array([s.time for s in snaps]),
            np.stack([s.values for s in snaps]), snaps[0].kappa, snaps[0].epsilon)


class SnapshotWriter:
    """Snapshot sink that numbers files in arrival order."""

    def __init__(self, directory, kappa: float, epsilon: float):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.kappa, self.epsilon = kappa, epsilon
        self.count = 0

    def __call__(self, t: float, values: np.ndarray) -> None:
        write_snapshot(self.directory / snapshot_name(self.count), values, t,
                       self.kappa, self.epsilon)
        self.count += 1


def write_symbol(path, m: MultiplierSymbol) -> None:
    g = m.grid
    header = SYMBOL_MAGIC + struct.pack(f"<II{g.d}I", VERSION, g.d, *g.dims)
    # (d, *dims) -> (*dims, d): d complex values per mode, modes row-major
    body = np.moveaxis(m.table, 0, -1).astype("<c16")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(body).tobytes())


def read_symbol(path, grid: Grid | None = None) -> MultiplierSymbol:
    """Load a symbol table; rejects tables that are not divergence-free or real."""
    buf = Path(path).read_bytes()
    d, dims, off = _read_header(buf, SYMBOL_MAGIC, path)
    if grid is not None and grid.dims != dims:
        raise FormatError(f"{path}: dims {dims} do not match grid {grid.dims}")
    count = math.prod(dims) * d
    if len(buf) != off + 16 * count:
        raise FormatError(f"{path}: truncated payload")
    body = np.frombuffer(buf, dtype="<c16", count=count, offset=off).reshape(dims + (d,))
    return custom_symbol(grid or Grid(dims), np.moveaxis(body, -1, 0).astype(complex))


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2)
        fh.write("\n")
