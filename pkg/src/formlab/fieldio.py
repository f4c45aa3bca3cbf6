"""Binary field files and CSV slices.

Layout (little endian)::

    magic        4 bytes   b"FLAB"
    version      uint32    1
    dim          uint32
    points       uint32    points per axis
    side_length  float64 x dim
    inner        float64   inner support fraction
    ncomp        uint32    1 (scalar), dim (vector) or dim*dim (matrix)
    flags        uint32    bit 0: skew matrix; bits 1-2: kind (0 scalar, 1 vector, 2 matrix)
    payload      complex128 x (ncomp * points**dim), row major, components first,
                 each value stored as (re, im)
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .grid import Grid, MatrixField, ScalarField, VectorField

MAGIC = b"FLAB"
VERSION = 1

Field = ScalarField | VectorField | MatrixField


def write_field(path: str | Path, f: Field) -> Path:
    g = f.grid
    if isinstance(f, ScalarField):
        ncomp, flags = 1, 0
    elif isinstance(f, VectorField):
        ncomp, flags = g.dim, 1 << 1
    else:
        ncomp, flags = g.dim * g.dim, int(f.skew) | (2 << 1)
    header = MAGIC + struct.pack("<III", VERSION, g.dim, g.points_per_axis)
    header += struct.pack(f"<{g.dim}d", *g.side_length)
    header += struct.pack("<dII", g.inner_support_fraction, ncomp, flags)
    payload = np.ascontiguousarray(f.values, dtype="<c16").tobytes()
    path = Path(path)
    path.write_bytes(header + payload)
    return path


def read_field(path: str | Path) -> Field:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a field file")
    version, dim, points = struct.unpack_from("<III", raw, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    off = 16
    sides = struct.unpack_from(f"<{dim}d", raw, off)
    off += 8 * dim
    inner, ncomp, flags = struct.unpack_from("<dII", raw, off)
    off += 16
    grid = Grid(dim, points, tuple(sides), inner)
    vals = np.frombuffer(raw, dtype="<c16", offset=off)
    if vals.size != ncomp * grid.size:
        raise ValueError(f"{path}: payload size mismatch")
    if not np.any(vals.imag):
        vals = vals.real
    kind = (flags >> 1) & 3
    if kind == 0 and ncomp == 1:
        return ScalarField(grid, vals.reshape(grid.shape))
    if kind == 1 and ncomp == dim:
        return VectorField(grid, vals.reshape(dim, *grid.shape))
    if kind == 2 and ncomp == dim * dim:
        return MatrixField(grid, vals.reshape(dim, dim, *grid.shape), skew=bool(flags & 1))
    raise ValueError(f"{path}: inconsistent kind flags {flags} for {ncomp} components")


def export_csv(path: str | Path, f: Field, slice_index: int | None = None) -> Path:
    """Write a 1D or 2D slice: coordinate columns then re/im per component.

    3D fields are cut at ``slice_index`` (default: middle) along the last axis.
    """
    g = f.grid
    vals = np.asarray(f.values).reshape(-1, *g.shape)
    axes = g.axes()
    if g.dim == 3:
        k = g.points_per_axis // 2 if slice_index is None else slice_index
        vals = vals[..., k]
        axes = axes[:2]
    ncomp = vals.shape[0]
    names = ["x", "y"][: len(axes)]
    cols = names + [f"{p}{c}" for c in range(ncomp) for p in ("re", "im")]
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for idx in np.ndindex(*vals.shape[1:]):
            row = [f"{axes[a][i]:.17g}" for a, i in enumerate(idx)]
            for c in range(ncomp):
                z = complex(vals[(c, *idx)])
                row += [f"{z.real:.17g}", f"{z.imag:.17g}"]
            w.writerow(row)
    return path
