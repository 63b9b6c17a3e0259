"""Flat binary field layout with a JSON metadata sidecar.

Layout (all little-endian):
  magic   4 bytes  b"ICF1"
  kind    uint8    0 = real amplitude field, 1 = complex momentum field
  dim     uint8
  bound   uint8    0 = truncated, 1 = periodic
  n       uint32   channel count
  per axis: points uint64, lo float64, hi float64
  data: float64 row-major per component; complex stored interleaved (re, im)

The sidecar at <path>.json repeats the geometry and records channel shifts,
physical constants, and momentum axes where applicable.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .fourier import MomentumField, PhysicalConstants
from .kinematic import PERIODIC, TRUNCATED, AmplitudeField, GridSpec

MAGIC = b"ICF1"
_KIND_AMPLITUDE = 0
_KIND_MOMENTUM = 1


def _write_header(fh, kind: int, grid: GridSpec, channels: int) -> None:
    fh.write(MAGIC)
    bound = 1 if grid.boundary == PERIODIC else 0
    fh.write(struct.pack("<BBBI", kind, grid.dim, bound, channels))
    for (lo, hi), p in zip(grid.extents, grid.points):
        fh.write(struct.pack("<Qdd", p, lo, hi))


def _read_header(fh):
    magic = fh.read(4)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}; not an infocap field file")
    kind, dim, bound, channels = struct.unpack("<BBBI", fh.read(7))
    extents = []
    points = []
    for _ in range(dim):
        p, lo, hi = struct.unpack("<Qdd", fh.read(24))
        points.append(p)
        extents.append((lo, hi))
    grid = GridSpec(tuple(extents), tuple(points),
                    PERIODIC if bound else TRUNCATED)
    return kind, grid, channels


def _sidecar(path) -> Path:
    return Path(str(path) + ".json")


def write_amplitude_field(field: AmplitudeField, path) -> None:
    path = Path(path)
    with open(path, "wb") as fh:
        _write_header(fh, _KIND_AMPLITUDE, field.grid, field.channel_count)
        fh.write(np.ascontiguousarray(field.components, dtype="<f8").tobytes())
    meta = {
        "kind": "amplitude",
        "dim": field.grid.dim,
        "points": list(field.grid.points),
        "extents": [list(e) for e in field.grid.extents],
        "boundary": field.grid.boundary,
        "channels": field.channel_count,
        "shifts": None if field.shifts is None else field.shifts.tolist(),
    }
    _sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True))


def read_amplitude_field(path) -> AmplitudeField:
    path = Path(path)
    with open(path, "rb") as fh:
        kind, grid, channels = _read_header(fh)
        if kind != _KIND_AMPLITUDE:
            raise ValueError("file holds a momentum field, not amplitudes")
        count = channels * int(np.prod(grid.points))
        data = np.frombuffer(fh.read(8 * count), dtype="<f8", count=count)
    shifts = None
    side = _sidecar(path)
    if side.exists():
        meta = json.loads(side.read_text())
        if meta.get("shifts") is not None:
            shifts = np.asarray(meta["shifts"], dtype=float)
    comps = data.reshape((channels,) + grid.points).astype(float)
    return AmplitudeField(comps, grid, shifts=shifts)


def write_momentum_field(momentum: MomentumField, path) -> None:
    path = Path(path)
    with open(path, "wb") as fh:
        _write_header(fh, _KIND_MOMENTUM, momentum.grid, momentum.channel_count)
        inter = np.empty(momentum.components.shape + (2,))
        inter[..., 0] = momentum.components.real
        inter[..., 1] = momentum.components.imag
        fh.write(np.ascontiguousarray(inter, dtype="<f8").tobytes())
    meta = {
        "kind": "momentum",
        "dim": momentum.grid.dim,
        "points": list(momentum.grid.points),
        "extents": [list(e) for e in momentum.grid.extents],
        "boundary": momentum.grid.boundary,
        "channels": momentum.channel_count,
        "constants": {"hbar": momentum.constants.hbar, "c": momentum.constants.c},
        "momentum_axes": [ax.tolist() for ax in momentum.momentum_axes],
        "leakage": momentum.leakage,
    }
    _sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True))


def read_momentum_field(path) -> MomentumField:
    path = Path(path)
    with open(path, "rb") as fh:
        kind, grid, channels = _read_header(fh)
        if kind != _KIND_MOMENTUM:
            raise ValueError("file holds an amplitude field, not momenta")
        count = channels * int(np.prod(grid.points)) * 2
        data = np.frombuffer(fh.read(8 * count), dtype="<f8", count=count)
    meta = json.loads(_sidecar(path).read_text())
    consts = PhysicalConstants(**meta["constants"])
    axes = tuple(np.asarray(ax, dtype=float) for ax in meta["momentum_axes"])
    inter = data.reshape((channels,) + grid.points + (2,))
    comps = inter[..., 0] + 1j * inter[..., 1]
    return MomentumField(comps, axes, consts, grid, meta.get("leakage"))
