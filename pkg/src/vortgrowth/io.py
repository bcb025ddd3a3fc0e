"""VORT field snapshots and CSV series."""
from __future__ import annotations

import csv
import os
import struct
from pathlib import Path

import numpy as np

from .core.grid import FREE, TORUS, DomainSpec, ScalarField2D
from .errors import ConfigError, SnapshotFormatError

MAGIC = b"VORT"
VERSION = 1
HEADER = struct.Struct("<4sIBII5d")
_KIND_CODE = {TORUS: 0, FREE: 1}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


def encode_snapshot(field: ScalarField2D) -> bytes:
    d = field.domain
    if d.kind not in _KIND_CODE:
        raise SnapshotFormatError(f"snapshots store torus or free fields, not {d.kind}")
    head = HEADER.pack(MAGIC, VERSION, _KIND_CODE[d.kind], d.nx, d.ny, d.origin[0],
                       d.origin[1], d.length[0], d.length[1], float(field.time))
    return head + np.ascontiguousarray(field.values, dtype="<f8").tobytes()


def decode_snapshot(buf: bytes) -> ScalarField2D:
    if len(buf) < HEADER.size:
        raise SnapshotFormatError("file shorter than the snapshot header")
    magic, version, kind, nx, ny, o1, o2, l1, l2, t = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {version}")
    if kind not in _CODE_KIND:
        raise SnapshotFormatError(f"unknown field kind {kind}")
    expected = HEADER.size + 8 * nx * ny
    if len(buf) != expected:
        raise SnapshotFormatError(f"payload is {len(buf) - HEADER.size} bytes, "
                                  f"expected {8 * nx * ny} for {nx}x{ny}")
    d = DomainSpec(_CODE_KIND[kind], nx, ny, (o1, o2), (l1, l2))
    vals = np.frombuffer(buf, dtype="<f8", offset=HEADER.size).reshape(nx, ny).astype(float)
    return ScalarField2D(d, vals, t)


def save_snapshot(path, field: ScalarField2D) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_snapshot(field))
    return path


def load_snapshot(path) -> ScalarField2D:
    try:
        buf = Path(path).read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read snapshot {path}: {e}") from e
    return decode_snapshot(buf)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class CsvSeries:
    """Append-only CSV writer with a fixed column list; each row is flushed."""

    def __init__(self, path, columns):
        self.path = Path(path)
        self.columns = list(columns)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="")
        self._fh.write(",".join(self.columns) + "\n")
        self._fh.flush()

    def append(self, row: dict) -> None:
        missing = [c for c in self.columns if c not in row]
        if missing:
            raise ConfigError(f"row lacks columns {missing}")
        self._fh.write(",".join(_fmt(row[c]) for c in self.columns) + "\n")
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(path, columns, rows) -> Path:
    with CsvSeries(path, columns) as w:
        for r in rows:
            w.append(r)
    return Path(path)


def read_csv(path) -> dict:
    """Columns of a numeric CSV as float arrays (non-numeric cells become nan)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path} is empty")
    head, body = rows[0], rows[1:]
    out = {}
    for i, name in enumerate(head):
        col = []
        for r in body:
            try:
                col.append(float(r[i]))
            except (ValueError, IndexError):
                col.append(float("nan"))
        out[name] = np.array(col)
    return out
