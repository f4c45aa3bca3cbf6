"""Operator coefficients, their real symbol triple and sesquilinear forms.

Conventions: ``(A grad u)_j = sum_k a_jk d_k u`` and
``<Lu, v> = -<A grad u, grad v> + <b . grad u, v> + <c u, v>`` with
``<f, g> = sum f conj(g) h^n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import (
    Grid,
    GridMismatch,
    MatrixField,
    ScalarField,
    VectorField,
    div,
    div_matrix_rows,
    grad,
)

__all__ = [
    "CoefficientSet",
    "ReducedSymbols",
    "split_symmetric",
    "to_divergence_form",
    "reduce_symbols",
    "sesquilinear",
    "point_value",
]

Atom = tuple[float, complex]


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """The triple (A, b, c) of ``L u = div(A grad u) + b . grad u + c u``.

    With ``form_tag == "nondivergence"`` the principal part is read as
    ``sum_jk a_jk d_j d_k u`` instead. ``point_masses`` adds atoms
    ``w * delta_x`` to c (1D only).
    """

    A: MatrixField
    b: VectorField
    c: ScalarField
    form_tag: str = "divergence"
    point_masses: tuple[Atom, ...] = ()

    def __post_init__(self) -> None:
        g = self.A.grid
        if self.b.grid != g or self.c.grid != g:
            raise GridMismatch("A, b and c must share one grid")
        if self.form_tag not in ("divergence", "nondivergence"):
            raise ValueError(f"unknown form tag {self.form_tag!r}")
        atoms = tuple((float(x), complex(w)) for x, w in self.point_masses)
        if atoms and g.dim != 1:
            raise ValueError("point masses are only supported in one dimension")
        object.__setattr__(self, "point_masses", atoms)

    @property
    def grid(self) -> Grid:
        return self.A.grid

    @classmethod
    def build(
        cls,
        grid: Grid,
        A: MatrixField | None = None,
        b: VectorField | None = None,
        c: ScalarField | None = None,
        form_tag: str = "divergence",
        point_masses: Sequence[Atom] = (),
    ) -> "CoefficientSet":
        """Missing coefficients default to zero."""
        A = MatrixField.zeros(grid) if A is None else A
        b = VectorField(grid, np.zeros((grid.dim, *grid.shape))) if b is None else b
        c = ScalarField(grid, np.zeros(grid.shape)) if c is None else c
        return cls(A, b, c, form_tag, tuple(point_masses))

    @classmethod
    def laplace(cls, grid: Grid) -> "CoefficientSet":
        return cls.build(grid, A=MatrixField.identity(grid))

    def scaled(self, lam: complex) -> "CoefficientSet":
        return CoefficientSet(
            MatrixField(self.grid, self.A.values * lam),
            self.b * lam,
            self.c * lam,
            self.form_tag,
            tuple((x, w * lam) for x, w in self.point_masses),
        )


@dataclass(frozen=True, eq=False)
class ReducedSymbols:
    """Real triple (P, d, sigma) with pointwise ellipticity bounds of P."""

    P: MatrixField
    d: VectorField
    sigma: ScalarField
    atoms: tuple[tuple[float, float], ...] = ()
    m: float = field(init=False)
    M: float = field(init=False)

    def __post_init__(self) -> None:
        eig = self.P.pointwise_eigvalsh()
        object.__setattr__(self, "m", float(eig.min()))
        object.__setattr__(self, "M", float(eig.max()))

    @property
    def grid(self) -> Grid:
        return self.P.grid

    def is_nonnegative(self, tol: float = 1e-12) -> bool:
        return self.m >= -tol * max(1.0, abs(self.M))

    def operator(self) -> CoefficientSet:
        """``L2 = div(P grad) + 2i d . grad + sigma``."""
        return CoefficientSet(
            self.P,
            VectorField(self.grid, 2j * self.d.values),
            self.sigma,
            "divergence",
            tuple((x, complex(w)) for x, w in self.atoms),
        )


def split_symmetric(A: MatrixField) -> tuple[MatrixField, MatrixField]:
    """``A = A_s + A_c`` with ``A_s`` symmetric and ``A_c`` skew."""
    At = np.swapaxes(A.values, 0, 1)
    A_s = 0.5 * (A.values + At)
    A_c = 0.5 * (A.values - At)
    return MatrixField(A.grid, A_s), MatrixField(A.grid, A_c, skew=True)


def to_divergence_form(cs: CoefficientSet) -> CoefficientSet:
    """Rewrite ``sum a_jk d_j d_k u + b . grad u + c u`` in divergence form.

    ``div(A grad u)`` differs from the non-divergence principal part by
    ``Div(A^T) . grad u``, so the drift becomes ``b - Div(A^T)``. For
    symmetric A this is ``b - Div A``.
    """
    if cs.form_tag != "nondivergence":
        raise ValueError("input is already in divergence form")
    b = cs.b - div_matrix_rows(cs.A.transpose())
    return CoefficientSet(cs.A, b, cs.c, "divergence", cs.point_masses)


def reduce_symbols(cs: CoefficientSet) -> ReducedSymbols:
    """``P = Re A_s``, ``d = (Im b - Div Im A_c) / 2``, ``sigma = Re c - div(Re b) / 2``."""
    if cs.form_tag == "nondivergence":
        cs = to_divergence_form(cs)
    g = cs.grid
    A_s, A_c = split_symmetric(cs.A)
    P = MatrixField(g, A_s.values.real)
    skew_im = MatrixField(g, np.imag(A_c.values), skew=True)
    d = 0.5 * (cs.b.imag - div_matrix_rows(skew_im))
    sigma = cs.c.real - 0.5 * div(cs.b.real)
    atoms = tuple((x, w.real) for x, w in cs.point_masses)
    return ReducedSymbols(P, VectorField(g, d.values.real), ScalarField(g, sigma.values.real), atoms)


def point_value(u: ScalarField, x: float) -> complex:
    """Trigonometric interpolation of a 1D field at ``x``."""
    g = u.grid
    if g.dim != 1:
        raise ValueError("point evaluation is implemented for 1D fields")
    n = g.points_per_axis
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=g.h[0])
    coef = np.array(u.spectrum, dtype=complex)
    phase = np.exp(1j * k * x)
    phase[n // 2] = np.cos(k[n // 2] * x)
    return complex(np.sum(coef * phase) / n)


def sesquilinear(cs: CoefficientSet, u: ScalarField, v: ScalarField) -> complex:
    """``<Lu, v>`` by spectral differentiation and grid quadrature."""
    g = cs.grid
    if u.grid != g or v.grid != g:
        raise GridMismatch("test functions must live on the coefficient grid")
    vol = g.cell_volume
    gu = grad(u).values
    vbar = np.conj(v.values)
    if cs.form_tag == "divergence":
        gv = grad(v).values
        principal = -np.sum(np.einsum("jk...,k...->j...", cs.A.values, gu) * np.conj(gv))
    else:
        hess = np.stack([grad(ScalarField(g, gu[j])).values for j in range(g.dim)])
        principal = np.sum(np.einsum("jk...,jk...->...", cs.A.values, hess) * vbar)
    drift = np.sum(np.sum(cs.b.values * gu, axis=0) * vbar)
    zeroth = np.sum(cs.c.values * u.values * vbar)
    total = complex(principal + drift + zeroth) * vol
    for x, w in cs.point_masses:
        total += w * point_value(u, x) * np.conj(point_value(v, x))
    return total
