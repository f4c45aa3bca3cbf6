"""Size functionals: dyadic BMO, Morrey growth, Hölder seminorm and the trace norm."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from .discrete import TestSpace
from .grid import Grid, MatrixField, ScalarField, VectorField, fft_workers
from .krylov import DEFAULT_CAP, DEFAULT_TOL, extreme_eigenpair

__all__ = [
    "NormReport",
    "bmo_norm",
    "morrey_constant",
    "lip_seminorm",
    "trace_norm",
    "refinement_sweep",
    "admissible_at_desk_scale",
]


@dataclass
class NormReport:
    kind: str
    value: float
    witness: dict = field(default_factory=dict)
    refinement_trace: list[tuple[int, float]] = field(default_factory=list)
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    witness_field: ScalarField | None = None

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "witness": self.witness,
            "refinement_trace": [list(t) for t in self.refinement_trace],
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
        }


def _bmo_array(vals: np.ndarray, dim: int) -> tuple[float, dict]:
    n = vals.shape[0]
    best, wit = 0.0, {"level": 0, "cube": [0] * dim, "side_cells": n}
    levels = int(math.log2(n))
    for lev in range(levels):  # side of one cell has zero oscillation
        nb = 2**lev
        s = n // nb
        shp = []
        for _ in range(dim):
            shp += [nb, s]
        blocks = vals.reshape(shp)
        inner = tuple(range(1, 2 * dim, 2))
        mean = blocks.mean(axis=inner, keepdims=True)
        osc = np.abs(blocks - mean).mean(axis=inner)
        idx = np.unravel_index(int(np.argmax(osc)), osc.shape)
        if osc[idx] > best:
            best = float(osc[idx])
            wit = {"level": lev, "cube": [int(i) for i in idx], "side_cells": s}
    return best, wit


def bmo_norm(f: ScalarField | MatrixField) -> NormReport:
    """Supremum of the mean oscillation over the dyadic cubes of the box."""
    g = f.grid
    if isinstance(f, MatrixField):
        best, wit = 0.0, {}
        for j, k in itertools.product(range(g.dim), repeat=2):
            val, w = _bmo_array(f.values[j, k], g.dim)
            if val > best or not wit:
                best, wit = val, {**w, "entry": [j, k]}
    else:
        best, wit = _bmo_array(f.values, g.dim)
    wit["lattice"] = "dyadic"
    return NormReport("bmo", best, wit)


def _periodic_offsets(grid: Grid) -> np.ndarray:
    """Squared periodic distance from node 0 to every node."""
    r2 = np.zeros(grid.shape)
    n = grid.points_per_axis
    for j, hj in enumerate(grid.h):
        i = np.arange(n)
        d = np.minimum(i, n - i) * hj
        shp = [1] * grid.dim
        shp[j] = n
        r2 = r2 + (d**2).reshape(shp)
    return r2


def morrey_constant(g_field: VectorField | ScalarField, s: float) -> NormReport:
    """``sup r^{-s} int_{B_r(x)} |g|^2`` over node centres and dyadic radii ``2h .. L/2``.

    The ball indicator is smoothed over one mesh width (partial-volume weight
    ``clip((r - |y|) / h + 1/2, 0, 1)``) so the quadrature of a constant
    approaches ``omega_n r^n`` even at radii of a few cells.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    grid = g_field.grid
    dens = np.abs(g_field.values) ** 2
    if isinstance(g_field, VectorField):
        dens = dens.sum(axis=0)
    r2 = _periodic_offsets(grid)
    workers = fft_workers()
    dh = sfft.rfftn(dens, workers=workers)
    hmin = min(grid.h)
    rmax = 0.5 * min(grid.side_length)
    best, wit = 0.0, {"center": [0] * grid.dim, "radius": 2 * hmin}
    r = 2.0 * hmin
    while r <= rmax * (1 + 1e-12):
        ball = np.clip((r - np.sqrt(r2)) / hmin + 0.5, 0.0, 1.0)
        mass = sfft.irfftn(dh * np.conj(sfft.rfftn(ball, workers=workers)), s=grid.shape, workers=workers)
        mass *= grid.cell_volume
        idx = np.unravel_index(int(np.argmax(mass)), mass.shape)
        val = float(mass[idx]) / r**s
        if val > best:
            best, wit = val, {"center": [int(i) for i in idx], "radius": r}
        r *= 2.0
    return NormReport(f"morrey({s:g})", max(best, 0.0), wit)


def _lip_schedule(grid: Grid) -> list[np.ndarray]:
    dirs = []
    for e in itertools.product((-1, 0, 1), repeat=grid.dim):
        nz = [x for x in e if x]
        if nz and nz[0] > 0:
            dirs.append(np.array(e))
    out = []
    step = 1
    while step <= grid.points_per_axis // 2:
        out += [step * d for d in dirs]
        step *= 2
    return out


def lip_seminorm(f: ScalarField, alpha: float, inner_only: bool = False) -> NormReport:
    """``max |f(x) - f(y)| / |x - y|^alpha`` over node pairs on a dyadic displacement schedule.

    Displacements are ``2^k e`` with ``e`` in ``{-1, 0, 1}^n``, up to half the
    box, and pairs never wrap around the torus.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    grid = f.grid
    vals = f.values
    if inner_only:
        i0, i1 = grid.inner_bounds
        hi = min(i1, grid.points_per_axis - 1)
        vals = vals[(slice(i0, hi + 1),) * grid.dim]
    n = vals.shape[0]
    hs = np.array(grid.h)
    best, wit = 0.0, {"displacement": [0] * grid.dim, "point": [0] * grid.dim}
    for disp in _lip_schedule(grid):
        if np.max(np.abs(disp)) >= n:
            continue
        a_sl, b_sl = [], []
        for dj in disp:
            if dj >= 0:
                a_sl.append(slice(0, n - dj))
                b_sl.append(slice(dj, n))
            else:
                a_sl.append(slice(-dj, n))
                b_sl.append(slice(0, n + dj))
        diff = np.abs(vals[tuple(b_sl)] - vals[tuple(a_sl)])
        dist = float(np.linalg.norm(disp * hs))
        idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
        val = float(diff[idx]) / dist**alpha
        if val > best:
            start = [int(i + s.start) for i, s in zip(idx, a_sl)]
            best, wit = val, {"displacement": [int(x) for x in disp], "point": start}
    return NormReport(f"lip({alpha:g})", best, wit)


def trace_norm(
    mu: ScalarField,
    atoms: Sequence[tuple[float, float]] = (),
    tol: float = DEFAULT_TOL,
    max_matvecs: int = DEFAULT_CAP,
    seed: int = 0,
) -> NormReport:
    """Least C with ``int |u|^2 dmu <= C^2 ||grad u||^2`` over the Dirichlet space.

    Computed as the square root of the top eigenvalue of
    ``K^{-1/2} M_mu K^{-1/2}`` by Lanczos iteration.
    """
    grid = mu.grid
    vals = np.asarray(mu.values)
    if np.iscomplexobj(vals):
        if np.max(np.abs(vals.imag)) > 1e-12 * max(1.0, np.max(np.abs(vals))):
            raise ValueError("mu must be real")
        vals = vals.real
    scale = max(1.0, float(np.max(np.abs(vals))) if vals.size else 1.0)
    if vals.size and vals.min() < -1e-12 * scale:
        raise ValueError("mu must be nonnegative")
    if any(w < 0 for _, w in atoms):
        raise ValueError("atom weights must be nonnegative")
    vals = np.maximum(vals, 0.0)
    space = TestSpace(grid)
    M = space.mass(vals, atoms)
    if M.nnz == 0 or not np.any(M.data):
        return NormReport("trace", 0.0, {"test_function": "none"})

    def op(x):
        return space.dirichlet_power(M @ space.dirichlet_power(x, -0.5), -0.5)

    res = extreme_eigenpair(op, space.size, "largest", tol=tol, max_matvecs=max_matvecs, seed=seed)
    lam = max(res.value, 0.0)
    u = space.dirichlet_power(res.vector, -0.5)
    wf = ScalarField(grid, space.embed(u / np.max(np.abs(u))))
    return NormReport(
        "trace",
        math.sqrt(lam),
        {"test_function": "top generalized eigenvector", "seed": seed},
        iterations=res.matvecs,
        residual=res.residual,
        converged=res.converged,
        witness_field=wf,
    )


def refinement_sweep(build: Callable[[Grid], float], grids: Sequence[Grid]) -> list[tuple[int, float]]:
    """Evaluate ``build`` on each grid; returns ``(points_per_axis, value)`` pairs."""
    return [(g.points_per_axis, float(build(g))) for g in grids]


def admissible_at_desk_scale(trace: Sequence[tuple[int, float]], rel: float = 0.10) -> bool:
    """Value moved by less than ``rel`` over the last two dyadic refinements."""
    if len(trace) < 3:
        raise ValueError("need at least three levels")
    vals = [v for _, v in trace[-3:]]
    return all(abs(b - a) <= rel * max(abs(a), 1e-300) for a, b in zip(vals, vals[1:]))
