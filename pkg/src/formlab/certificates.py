"""Riccati certificates for nonnegativity of real Schrödinger-type forms.

A certificate is a staggered field: entry ``i`` of component ``j`` is the
value of the field on the edge from node ``i`` to node ``i + e_j`` (its mean
over that edge). The discrete test is built on the per-edge identity

    p (w_b - w_a)^2 - p [(1 - 1/rho) w_b^2 + (1 - rho) w_a^2] = (p/rho) (w_b - rho w_a)^2 >= 0,

valid for every ``rho > 0``, with ``rho = exp(-h g_e)``. Summing over edges
bounds the Dirichlet form from below by ``sum_i h^n w_i^2 V_i``, so a
nonnegative nodal residual ``r_i = V_i - sigma_i`` proves the discrete form
nonnegative. As ``h -> 0`` the residual tends to ``div(P g) - P g . g - sigma``.
Edges reaching a boundary node (where test functions vanish) contribute
their optimal value ``p_e / h^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discrete import TestSpace
from .grid import MatrixField, ScalarField, VectorField, grad
from .krylov import DEFAULT_CAP, extreme_eigenpair
from .varforms import AccretivityReport, _hermitian_min, _pencil_extreme, _verdict, _embed

__all__ = [
    "Certificate1D",
    "CertificateND",
    "IndefiniteForm",
    "LinearCheckReport",
    "form_nonneg_1d",
    "riccati_check_1d",
    "riccati_construct_1d",
    "riccati_check_nd",
    "riccati_construct_nd",
    "linear_sufficient_check",
    "effective_potential_1d",
    "gershgorin_diagonal",
]

VALID_TOL = 1e-8
MARGIN = 1e-6
FLOOR = 1e-12


class IndefiniteForm(ValueError):
    """The form is not positive with the required margin; carries a witness."""

    def __init__(self, msg: str, witness: ScalarField | None = None, min_rayleigh: float | None = None):
        super().__init__(msg)
        self.witness = witness
        self.min_rayleigh = min_rayleigh


@dataclass
class Certificate1D:
    f: ScalarField
    slack: ScalarField
    valid: bool
    min_slack: float = 0.0

    def summary(self) -> dict:
        return {"valid": self.valid, "min_slack": self.min_slack, "kind": "1d"}


@dataclass
class CertificateND:
    g: VectorField
    slack: ScalarField
    valid: bool
    min_slack: float = 0.0
    conservative: bool = False

    def summary(self) -> dict:
        return {"valid": self.valid, "min_slack": self.min_slack, "kind": "nd", "conservative": self.conservative}


# shared pieces ----------------------------------------------------------

def _real(values) -> np.ndarray:
    return np.real(np.asarray(values))


def effective_potential_1d(p: ScalarField, b: ScalarField, c: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """``Re c - (Re b)'/2 + (Im b)^2 / (4p)`` with ``0/0 = 0``.

    The drift term enters with a plus sign: choosing the phase of ``u`` to
    cancel ``Im b`` costs ``int (Im b)^2 h^2 / (4p)`` of the Dirichlet energy.

    Returns the nodal values and a mask of nodes where ``p = 0`` but
    ``Im b != 0`` (the quotient is not locally integrable there).
    """
    pv = _real(p.values)
    ib = np.imag(b.values)
    drb = grad(b.real).values[0]
    q = np.zeros_like(pv)
    pos = pv > 0
    q[pos] = ib[pos] ** 2 / (4.0 * pv[pos])
    bad = (~pos) & (np.abs(ib) > 0)
    sig = _real(c.values) - 0.5 * drb + q
    return sig, bad


def _lumped_sigma(space: TestSpace, sigma: np.ndarray, atoms) -> np.ndarray:
    """Nodal sigma at the unknowns, with positive atoms spread over hat weights.

    ``(sum phi_i w_i)^2 <= sum phi_i w_i^2`` makes this an upper bound of the
    atom contribution; negative atoms only help and are dropped.
    """
    out = space.restrict(sigma).astype(float)
    for x, wgt in atoms:
        if wgt <= 0:
            continue
        for i, phi in space.hat_weights(x):
            out[i] += wgt * phi / space.vol
    return out


def gershgorin_diagonal(P: MatrixField) -> np.ndarray:
    """Diagonal lower bound ``D_jj = P_jj - sum_{k != j} |P_jk|``; P - D is positive semidefinite."""
    vals = _real(P.values)
    dim = P.grid.dim
    out = np.zeros((dim, *P.grid.shape))
    for j in range(dim):
        out[j] = vals[j, j] - sum(np.abs(vals[j, k]) for k in range(dim) if k != j)
    return out


def _picone_residual(space: TestSpace, pdiag: np.ndarray, g: np.ndarray, sigma_u: np.ndarray) -> np.ndarray:
    """Nodal residual ``V_i - sigma_i`` at the unknowns (see module docstring)."""
    V = np.zeros(space.size)
    flat_g = g.reshape(space.dim, -1)
    for j in range(space.dim):
        a, b, (lo, hi, keep) = space.edges(j)
        pe = space.edge_average(pdiag[j], j)
        ge = flat_g[j][space._gid[lo][keep]]
        hj = space.h[j]
        w = 1.0 / hj**2
        inner = (a >= 0) & (b >= 0)
        x = np.clip(hj * ge[inner], -700.0, 700.0)
        pin = pe[inner]
        with np.errstate(invalid="ignore"):
            lower = np.where(pin > 0, -pin * np.expm1(-x), 0.0)
            upper = np.where(pin > 0, -pin * np.expm1(x), 0.0)
        # f^2/p not summable where p vanishes on an edge carrying flux
        blow = (pin <= 0) & (ge[inner] != 0)
        lower[blow] = -np.inf
        upper[blow] = -np.inf
        np.add.at(V, a[inner], w * lower)
        np.add.at(V, b[inner], w * upper)
        left = (a < 0) & (b >= 0)
        right = (a >= 0) & (b < 0)
        np.add.at(V, b[left], w * np.maximum(pe[left], 0.0))
        np.add.at(V, a[right], w * np.maximum(pe[right], 0.0))
    return V - sigma_u


def _ground_state(space: TestSpace, H: sp.spmatrix, seed: int = 0) -> tuple[np.ndarray, float]:
    """Positive ground state of ``H y = mu h^n y`` (H a positive definite M-matrix)."""
    H = sp.csc_matrix(H)
    if space.dim <= 2:
        lu = spla.splu(H)
        solve = lu.solve
    else:
        prec = spla.LinearOperator(H.shape, matvec=lambda x: space.dirichlet_power(x, -1.0))
        Hop = H.tocsr()

        def solve(x):
            y, info = spla.cg(Hop, x, rtol=1e-13, atol=0.0, M=prec, maxiter=5000)
            if info != 0:
                raise RuntimeError("inner solve did not converge")
            return y

    res = extreme_eigenpair(lambda x: solve(x), space.size, "largest", tol=1e-11, max_matvecs=DEFAULT_CAP, seed=seed)
    y = res.vector
    if y.sum() < 0:
        y = -y
    y = np.abs(y)
    y = y + FLOOR * y.max()
    mu = 1.0 / (space.vol * res.value)
    return y, mu


def _log_ratio_field(space: TestSpace, y: np.ndarray, scale_edges: list[np.ndarray] | None = None) -> np.ndarray:
    """Staggered ``-log(y_b / y_a) / h`` on interior edges, zero elsewhere."""
    g = np.zeros((space.dim, space.grid.size))
    for j in range(space.dim):
        a, b, (lo, hi, keep) = space.edges(j)
        inner = (a >= 0) & (b >= 0)
        idx = space._gid[lo][keep][inner]
        val = -np.log(y[b[inner]] / y[a[inner]]) / space.h[j]
        if scale_edges is not None:
            val = val * scale_edges[j][inner]
        g[j, idx] = val
    return g.reshape(space.dim, *space.grid.shape)


# one dimension ----------------------------------------------------------

def _check_1d_inputs(p: ScalarField, b: ScalarField, c: ScalarField) -> None:
    if p.grid.dim != 1:
        raise ValueError("one-dimensional routine called on a multi-dimensional grid")
    if b.grid != p.grid or c.grid != p.grid:
        raise ValueError("p, b, c must share one grid")
    pv = _real(p.values)
    if pv.min() < -1e-12 * max(1.0, float(np.abs(pv).max())):
        raise ValueError("p must be nonnegative")


def form_nonneg_1d(
    p: ScalarField,
    b: ScalarField,
    c: ScalarField,
    atoms: Sequence[tuple[float, float]] = (),
    tol: float = 1e-8,
    seed: int = 0,
) -> AccretivityReport:
    """Smallest Dirichlet-normalized value of
    ``int p h'^2 - <Re c - (Re b)'/2, h^2> - int (Im b)^2 h^2 / (4p)``."""
    _check_1d_inputs(p, b, c)
    space = TestSpace(p.grid)
    sig, bad = effective_potential_1d(p, b, c)
    if np.any(space.restrict(bad)):
        i = int(np.nonzero(space.restrict(bad))[0][0])
        return AccretivityReport(-math.inf, "not", location=[int(space.unknown_global[i])], extra={"reason": "(Im b)^2/p not integrable"})
    pv = np.maximum(_real(p.values), 0.0)
    H = (space.stiffness(pv[None, None]) - space.mass(sig, [(x, float(np.real(w))) for x, w in atoms])).tocsr()
    res = _hermitian_min(space, H, tol, DEFAULT_CAP, seed)
    u = space.dirichlet_power(res.vector, -0.5)
    return AccretivityReport(res.value, _verdict(res.value, res.converged), _embed(space, u),
                             iterations=res.matvecs, residual=res.residual, converged=res.converged)


def riccati_check_1d(
    p: ScalarField,
    b: ScalarField,
    c: ScalarField,
    f: ScalarField,
    atoms: Sequence[tuple[float, float]] = (),
    tol: float = VALID_TOL,
) -> Certificate1D:
    """Test ``Re c - (Re b)'/2 + (Im b)^2/(4p) <= f' - f^2/p`` node by node."""
    _check_1d_inputs(p, b, c)
    space = TestSpace(p.grid)
    sig, bad = effective_potential_1d(p, b, c)
    sig_u = _lumped_sigma(space, sig, [(x, float(np.real(w))) for x, w in atoms])
    sig_u[space.restrict(bad)] = np.inf
    pv = np.maximum(_real(p.values), 0.0)
    # g = f / p on each edge, with 0/0 = 0 and f != 0 over p = 0 marked infinite
    a, bb, (lo, hi, keep) = space.edges(0)
    pe = space.edge_average(pv, 0)
    fe = _real(f.values)[space._gid[lo][keep]]
    ge = np.zeros(pe.shape)
    pos = pe > 0
    ge[pos] = fe[pos] / pe[pos]
    ge[(~pos) & (fe != 0)] = np.inf
    g = np.zeros(p.grid.size)
    g[space._gid[lo][keep]] = ge
    r = _picone_residual(space, pv[None], g[None], sig_u)
    slack = ScalarField(p.grid, space.embed(np.where(np.isfinite(r), r, -1e300)))
    mn = float(r.min())
    return Certificate1D(ScalarField(p.grid, _real(f.values)), slack, bool(mn >= -tol), mn)


def _positive_bounds(pv: np.ndarray, space: TestSpace) -> tuple[float, float]:
    lat = space.lattice(pv)
    return float(lat.min()), float(lat.max())


def riccati_construct_1d(
    p: ScalarField,
    b: ScalarField,
    c: ScalarField,
    atoms: Sequence[tuple[float, float]] = (),
    margin: float = MARGIN,
    seed: int = 0,
) -> Certificate1D:
    """Certificate ``f = -p h'/h`` from the positive discrete ground state h."""
    _check_1d_inputs(p, b, c)
    space = TestSpace(p.grid)
    pv = _real(p.values)
    m, M = _positive_bounds(pv, space)
    if m <= 0:
        raise ValueError("p must be bounded below by a positive constant on the inner box")
    rep = form_nonneg_1d(p, b, c, atoms, seed=seed)
    if rep.min_rayleigh < margin:
        raise IndefiniteForm(
            f"form minimum {rep.min_rayleigh:.3e} is below the margin {margin:g}", rep.witness_u, rep.min_rayleigh
        )
    sig, _ = effective_potential_1d(p, b, c)
    sig_u = _lumped_sigma(space, sig, [(x, float(np.real(w))) for x, w in atoms])
    H = (space.stiffness(pv[None, None]) - sp.diags(space.vol * sig_u)).tocsr()
    lam = _hermitian_min(space, H, 1e-10, DEFAULT_CAP, seed).value
    if lam < margin:
        raise IndefiniteForm("form with lumped atoms is not positive", rep.witness_u, lam)
    y, _ = _ground_state(space, H, seed)
    pe = [space.edge_average(pv, 0)]
    f = _log_ratio_field(space, y, pe)[0]
    f_field = ScalarField(p.grid, f)
    return riccati_check_1d(p, b, c, f_field, atoms)


# several dimensions -----------------------------------------------------

def _is_diagonal(P: MatrixField) -> bool:
    dim = P.grid.dim
    return not any(np.any(P.values[j, k]) for j in range(dim) for k in range(dim) if j != k)


def riccati_check_nd(P: MatrixField, sigma: ScalarField, g: VectorField, tol: float = VALID_TOL) -> CertificateND:
    """Test ``sigma <= div(P g) - P g . g`` node by node.

    For non-diagonal P the test runs with the Gershgorin diagonal lower
    bound of P, which keeps it sound but makes it conservative.
    """
    space = TestSpace(P.grid)
    diag = _is_diagonal(P)
    pd = np.stack([_real(P.values[j, j]) for j in range(P.grid.dim)]) if diag else gershgorin_diagonal(P)
    if pd.min() < -1e-12 * max(1.0, float(np.abs(pd).max())) and diag:
        raise ValueError("P must be nonnegative")
    pd = np.maximum(pd, 0.0)
    r = _picone_residual(space, pd, _real(g.values), space.restrict(_real(sigma.values)))
    slack = ScalarField(P.grid, space.embed(np.where(np.isfinite(r), r, -1e300)))
    mn = float(r.min())
    return CertificateND(VectorField(P.grid, _real(g.values)), slack, bool(mn >= -tol), mn, conservative=not diag)


def riccati_construct_nd(P: MatrixField, sigma: ScalarField, margin: float = MARGIN, seed: int = 0) -> CertificateND:
    """Certificate ``g = -grad(h)/h`` from the positive ground state h of the (diagonalized) form."""
    space = TestSpace(P.grid)
    diag = _is_diagonal(P)
    pd = np.stack([_real(P.values[j, j]) for j in range(P.grid.dim)]) if diag else gershgorin_diagonal(P)
    lat_min = min(float(space.lattice(pd[j]).min()) for j in range(P.grid.dim))
    if lat_min <= 0:
        raise ValueError("P (or its Gershgorin diagonal) must be uniformly elliptic on the inner box")
    sig_u = space.restrict(_real(sigma.values))
    Pd = np.zeros((P.grid.dim, P.grid.dim, *P.grid.shape))
    for j in range(P.grid.dim):
        Pd[j, j] = pd[j]
    H = (space.stiffness(Pd) - sp.diags(space.vol * sig_u)).tocsr()
    res = _hermitian_min(space, H, 1e-10, DEFAULT_CAP, seed)
    if res.value < margin:
        u = _embed(space, space.dirichlet_power(res.vector, -0.5))
        raise IndefiniteForm(f"form minimum {res.value:.3e} is below the margin {margin:g}", u, res.value)
    y, _ = _ground_state(space, H, seed)
    g = _log_ratio_field(space, y)
    return riccati_check_nd(P, sigma, VectorField(P.grid, g))


@dataclass
class LinearCheckReport:
    divergence_ok: bool
    divergence_slack: float
    quarter_ratio: float
    quarter_ok: bool
    passed: bool
    note: str = "sufficient only: failing this test does not imply the form is indefinite"

    def summary(self) -> dict:
        return dict(self.__dict__)


def linear_sufficient_check(P: MatrixField, sigma: ScalarField, g: VectorField, tol: float = VALID_TOL, seed: int = 0) -> LinearCheckReport:
    """``sigma <= div(P g)`` together with ``int (P g . g) h^2 <= (1/4) int |P grad h|^2``.

    The flux ``P g`` is formed at nodes from the edge-averaged g and
    differentiated by central differences; the quarter bound is the top
    eigenvalue of the pair (multiplication by ``P g . g``, form of ``P^2``).
    """
    grid = P.grid
    space = TestSpace(grid)
    dim = grid.dim
    gv = _real(g.values)
    gn = np.stack([0.5 * (gv[j] + np.roll(gv[j], 1, axis=j)) for j in range(dim)])
    Pv = _real(P.values)
    flux = np.einsum("jk...,k...->j...", Pv, gn)
    divf = sum((np.roll(flux[j], -1, axis=j) - np.roll(flux[j], 1, axis=j)) / (2 * grid.h[j]) for j in range(dim))
    slack = space.restrict(divf - _real(sigma.values))
    div_slack = float(slack.min())
    dens = np.einsum("j...,j...->...", flux, gn)
    P2 = np.einsum("ij...,jk...->ik...", Pv, Pv)
    Mq = space.mass(np.maximum(dens, 0.0))
    if not np.any(Mq.data):
        ratio = 0.0
    else:
        ratio = _pencil_extreme(space, Mq, space.stiffness(P2), 1e-10, DEFAULT_CAP, seed)
    d_ok = div_slack >= -tol
    q_ok = ratio <= 0.25 + tol
    return LinearCheckReport(d_ok, div_slack, float(ratio), q_ok, d_ok and q_ok)
