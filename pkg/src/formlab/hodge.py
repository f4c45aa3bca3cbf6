"""Helmholtz-Hodge splitting of drift fields on the periodic box.

``b = mean + grad f + Div F`` with ``f = inv_lap(div b)`` and
``F = -inv_lap(Curl b)``. The minus sign comes from the row divergence:
``Div(inv_lap Curl b) = grad inv_lap div b - b`` for zero-mean b.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    Grid,
    MatrixField,
    ScalarField,
    VectorField,
    curl_matrix,
    div,
    div_matrix_rows,
    grad,
    inv_laplacian,
)

__all__ = [
    "HodgeParts",
    "hodge_decompose",
    "decompose_with_skew",
    "potential_field",
    "two_d_obstruction",
    "ObstructionReport",
]


def _inv_lap_matrix(F: MatrixField) -> MatrixField:
    g = F.grid
    out = np.zeros_like(F.values)
    for j in range(g.dim):
        for k in range(j + 1, g.dim):
            u, _ = inv_laplacian(F.entry(j, k))
            out[j, k] = u.values
            out[k, j] = -u.values
    return MatrixField(g, out, skew=True)


def _low_mode_fraction(b: VectorField) -> float:
    """Share of the non-mean spectral energy carried by the lowest shell."""
    g = b.grid
    n = g.points_per_axis
    idx = np.abs(np.fft.fftfreq(n, d=1.0 / n))
    grids = np.meshgrid(*([idx] * g.dim), indexing="ij")
    shell = np.max(np.stack(grids), axis=0)
    energy = np.sum(np.abs(b.spectrum) ** 2, axis=0)
    total = energy[shell > 0].sum()
    if total == 0:
        return 0.0
    return float(energy[shell == 1].sum() / total)


@dataclass(frozen=True, eq=False)
class HodgeParts:
    mean: np.ndarray
    f: ScalarField
    c_irr: VectorField
    F: MatrixField
    source_grid: Grid
    low_mode_fraction: float = 0.0

    @property
    def low_mode_warning(self) -> bool:
        """Spectral mass concentrated at the box scale; torus and whole-space pictures may differ."""
        return self.low_mode_fraction > 0.5

    @property
    def div_free(self) -> VectorField:
        return div_matrix_rows(self.F)

    def reconstruct(self) -> VectorField:
        g = self.source_grid
        m = self.mean.reshape(g.dim, *([1] * g.dim))
        return VectorField(g, m + self.c_irr.values + self.div_free.values)

    def summary(self) -> dict:
        return {
            "mean": [complex(x) if np.iscomplexobj(self.mean) else float(x) for x in self.mean],
            "f_l2": self.f.l2_norm(),
            "c_irr_l2": self.c_irr.l2_norm(),
            "div_F_l2": self.div_free.l2_norm(),
            "F_max": self.F.max_abs(),
            "low_mode_fraction": self.low_mode_fraction,
            "low_mode_warning": self.low_mode_warning,
        }


def _zero_mean_entries(F: MatrixField) -> MatrixField:
    axes = tuple(range(2, 2 + F.grid.dim))
    vals = F.values - F.values.mean(axis=axes, keepdims=True)
    return MatrixField(F.grid, vals, skew=F.skew)


def hodge_decompose(b: VectorField) -> HodgeParts:
    g = b.grid
    mean = np.asarray(b.mean())
    f, _ = inv_laplacian(div(b))
    c_irr = grad(f)
    F = _zero_mean_entries(-1.0 * _inv_lap_matrix(curl_matrix(b)))
    return HodgeParts(mean, f, c_irr, F, g, _low_mode_fraction(b))


def decompose_with_skew(b: VectorField, A_c: MatrixField) -> HodgeParts:
    """Splitting in which the skew part of the principal matrix is absorbed into F.

    ``F = -inv_lap(Curl(b - Div A_c)) + A_c`` so that ``Div F`` recovers the
    divergence-free part of b and ``F - A_c`` is the correction.
    """
    skew_err = np.max(np.abs(A_c.values + np.swapaxes(A_c.values, 0, 1)))
    if skew_err > 1e-12 * max(1.0, A_c.max_abs()):
        raise ValueError("A_c is not skew-symmetric")
    A_c = MatrixField(A_c.grid, A_c.values, skew=True)
    g = b.grid
    rest = b - div_matrix_rows(A_c)
    base = hodge_decompose(rest)
    F = -1.0 * _inv_lap_matrix(curl_matrix(rest)) + A_c
    F = _zero_mean_entries(F)
    return HodgeParts(np.asarray(b.mean()), base.f, base.c_irr, F, g, base.low_mode_fraction)


def potential_field(q: ScalarField) -> tuple[VectorField, complex]:
    """``h = grad inv_lap q`` with ``div h = q - mean(q)``; returns ``(h, mean(q))``."""
    u, mean = inv_laplacian(q)
    return grad(u), mean


@dataclass(frozen=True)
class ObstructionReport:
    div_b_l2: float
    q_l2: float
    tolerance: float
    passed: bool

    def summary(self) -> dict:
        return {"div_b_l2": self.div_b_l2, "q_l2": self.q_l2, "tolerance": self.tolerance, "passed": self.passed}


def two_d_obstruction(b: VectorField, q: ScalarField, tol: float = 1e-8) -> ObstructionReport:
    """Planar necessary condition for form boundedness: ``div b = 0`` and ``q = 0``.

    Norms are compared against ``tol`` times the size of the input.
    """
    if b.grid.dim != 2:
        raise ValueError("the planar obstruction test needs a 2D grid")
    db = div(b).l2_norm()
    ql = q.l2_norm()
    scale = max(1.0, b.l2_norm(), ql)
    passed = db <= tol * scale and ql <= tol * scale
    return ObstructionReport(db, ql, tol, passed)
