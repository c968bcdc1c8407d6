"""Readers and writers for snapshots, triplets, surrogates and reports.

Floats are written with 17 significant digits so text files round-trip
exactly and identical runs produce identical bytes.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .burgers import SnapshotSet
from .errors import ConfigError
from .krod import KoopmanTriplet

FLOAT_FMT = "%.17g"
SNAP_MAGIC = b"KRODSNAP"
SNAP_HEADER = struct.Struct("<8sIIdd")  # 32 bytes


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def write_matrix_csv(path, matrix, header: list[str] | None = None) -> Path:
    path = Path(path)
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with path.open("w", newline="\n") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in matrix:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_matrix_csv(path, header: bool = False) -> tuple[list[str] | None, np.ndarray]:
    lines = Path(path).read_text().splitlines()
    head = lines[0].split(",") if header else None
    body = lines[1:] if header else lines
    data = np.array([[float(v) for v in ln.split(",")] for ln in body if ln])
    return head, data


def write_snapshots_csv(path, snaps: SnapshotSet) -> Path:
    """First row: ``x`` then the snapshot times; then one row per grid point."""
    header = ["x"] + [_fmt(t) for t in snaps.times]
    return write_matrix_csv(path, np.column_stack([snaps.x_grid, snaps.values]), header)


def read_snapshots_csv(path) -> SnapshotSet:
    head, data = read_matrix_csv(path, header=True)
    times = np.array([float(t) for t in head[1:]])
    dt = float(times[1] - times[0]) if times.size > 1 else 0.0
    return SnapshotSet(data[:, 1:], data[:, 0], dt, float(times[0]))


def write_snapshots_blob(path, values, dt: float, L: float) -> Path:
    """Little-endian binary: 32-byte header then float64 values, row-major."""
    values = np.ascontiguousarray(values, dtype="<f8")
    nx, ncols = values.shape
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(SNAP_HEADER.pack(SNAP_MAGIC, nx, ncols, float(dt), float(L)))
        fh.write(values.tobytes(order="C"))
    return path


def read_snapshots_blob(path) -> tuple[np.ndarray, float, float]:
    """Return ``(values, dt, L)``."""
    raw = Path(path).read_bytes()
    if len(raw) < SNAP_HEADER.size:
        raise ConfigError(f"{path}: truncated header")
    magic, nx, ncols, dt, L = SNAP_HEADER.unpack_from(raw)
    if magic != SNAP_MAGIC:
        raise ConfigError(f"{path}: bad magic {magic!r}")
    expected = SNAP_HEADER.size + 8 * nx * ncols
    if len(raw) != expected:
        raise ConfigError(f"{path}: expected {expected} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8", offset=SNAP_HEADER.size).reshape(nx, ncols).copy()
    return values, dt, L


def dump_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def write_triplet(directory, triplet: KoopmanTriplet, stem: str = "") -> list[Path]:
    """``modes.csv`` (one column per mode), ``amplitudes.csv`` (one row per mode), ``triplet.json``."""
    d = Path(directory)
    prefix = f"{stem}_" if stem else ""
    k = triplet.k
    modes = write_matrix_csv(d / f"{prefix}modes.csv", triplet.modes, [f"phi_{j + 1}" for j in range(k)])
    amps = write_matrix_csv(d / f"{prefix}amplitudes.csv", triplet.amplitudes)
    side = dump_json(d / f"{prefix}triplet.json", {
        "k": k,
        "seed": triplet.seed,
        "eigvals": [float(v) for v in triplet.eigvals],
        "singular_values": None if triplet.singular_values is None else [float(v) for v in triplet.singular_values],
    })
    return [modes, amps, side]


def read_triplet(directory, stem: str = "") -> KoopmanTriplet:
    d = Path(directory)
    prefix = f"{stem}_" if stem else ""
    _, modes = read_matrix_csv(d / f"{prefix}modes.csv", header=True)
    _, amps = read_matrix_csv(d / f"{prefix}amplitudes.csv")
    meta = json.loads((d / f"{prefix}triplet.json").read_text())
    sv = meta.get("singular_values")
    return KoopmanTriplet(modes, amps, int(meta["k"]), np.asarray(meta["eigvals"]), int(meta["seed"]),
                          None if sv is None else np.asarray(sv))


def sha256(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
