"""Variational constants: form bounds, accretivity, commutators, subordination.

Every supremum runs over the Dirichlet space of the inner sub-box (see
``discrete.TestSpace``), except the subordination profiles, which use all
grid functions of the torus. Dirichlet-normalized problems are
preconditioned by ``K^{-1/2}``, applied through the sine transform, and
solved with the Lanczos routine in ``krylov``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .discrete import TestSpace
from .grid import MatrixField, ScalarField, VectorField, div, grad, make_test_function
from .hodge import hodge_decompose
from .krylov import DEFAULT_CAP, DEFAULT_TOL, EigResult, extreme_eigenpair
from .reduction import CoefficientSet, ReducedSymbols, reduce_symbols, to_divergence_form
from .regnorms import bmo_norm, trace_norm

log = logging.getLogger(__name__)

__all__ = [
    "FormBoundReport",
    "AccretivityReport",
    "SubordinationReport",
    "CrosscheckReport",
    "ComparabilityReport",
    "form_matrix",
    "form_bound_constant",
    "accretivity_min",
    "schrodinger_positivity",
    "commutator_constant",
    "criterion_crosscheck",
    "subordination_profile",
    "magnetic_coefficients",
    "magnetic_form",
    "magnetic_comparability",
    "MARGINAL_BAND",
]

MARGINAL_BAND = 1e-8


@dataclass
class FormBoundReport:
    constant: float
    witness_u: ScalarField | None = None
    witness_v: ScalarField | None = None
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    refinement_trace: list[tuple[int, float]] = field(default_factory=list)
    mass_term: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "bounded" if self.converged else "marginal"

    def summary(self) -> dict:
        return {
            "constant": self.constant,
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
            "verdict": self.verdict,
            "mass_term": self.mass_term,
            "refinement_trace": [list(t) for t in self.refinement_trace],
            **self.extra,
        }


@dataclass
class AccretivityReport:
    min_rayleigh: float
    verdict: str
    witness_u: ScalarField | None = None
    upper_eps: float | None = None
    lower_K: float | None = None
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    direction: list[float] | None = None
    location: list[int] | None = None
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "min_rayleigh": self.min_rayleigh,
            "verdict": self.verdict,
            "upper_eps": self.upper_eps,
            "lower_K": self.lower_K,
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
            "direction": self.direction,
            "location": self.location,
            **self.extra,
        }


@dataclass
class SubordinationReport:
    mode: str
    epsilons: list[float] = field(default_factory=list)
    constants: list[float] = field(default_factory=list)
    fitted_beta: float | None = None
    prefactor: float | None = None
    p: float | None = None
    p_constant: float | None = None
    witness: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "epsilons": self.epsilons,
            "constants": self.constants,
            "fitted_beta": self.fitted_beta,
            "prefactor": self.prefactor,
            "p": self.p,
            "p_constant": self.p_constant,
            "witness": self.witness,
        }


def _verdict(value: float, converged: bool) -> str:
    if not converged:
        return "marginal"
    return "accretive" if value >= -MARGINAL_BAND else "not"


# matrices ---------------------------------------------------------------

def form_matrix(space: TestSpace, cs: CoefficientSet) -> sp.csr_matrix:
    """B with ``v^* B u = <Lu, v>`` on the discrete space."""
    if cs.form_tag == "nondivergence":
        cs = to_divergence_form(cs)
    B = -space.stiffness(cs.A.values)
    if np.any(cs.b.values):
        B = B + space.drift(cs.b.values)
    if np.any(cs.c.values) or cs.point_masses:
        B = B + space.mass(cs.c.values, cs.point_masses)
    return sp.csr_matrix(B)


def _embed(space: TestSpace, w: np.ndarray) -> ScalarField:
    arr = space.embed(w)
    peak = np.max(np.abs(arr))
    return ScalarField(space.grid, arr / peak if peak > 0 else arr)


def _top_singular(space: TestSpace, B: sp.spmatrix, shift: float, tol: float, cap: int, seed: int):
    """Largest singular value of ``W^{-1/2} B W^{-1/2}`` with ``W = K + shift I``."""
    cplx = np.iscomplexobj(B.data)
    Bh = B.conj().T.tocsr()

    def T(x):
        return space.dirichlet_power(B @ space.dirichlet_power(x, -0.5, shift), -0.5, shift)

    def TH(x):
        return space.dirichlet_power(Bh @ space.dirichlet_power(x, -0.5, shift), -0.5, shift)

    res = extreme_eigenpair(lambda x: TH(T(x)), space.size, "largest", np.complex128 if cplx else np.float64, tol, cap, seed=seed)
    sigma = math.sqrt(max(res.value, 0.0))
    x = res.vector
    y = T(x)
    ny = np.linalg.norm(y)
    y = y / ny if ny > 0 else x
    return sigma, x, y, res


# form bound -------------------------------------------------------------

def form_bound_constant(
    cs: CoefficientSet,
    mass_term: bool = False,
    tol: float = DEFAULT_TOL,
    max_matvecs: int = DEFAULT_CAP,
    seed: int = 0,
) -> FormBoundReport:
    """Best C in ``|<Lu, v>| <= C ||u|| ||v||`` with the homogeneous (or full) energy norm."""
    space = TestSpace(cs.grid)
    B = form_matrix(space, cs)
    if B.nnz == 0 or not np.any(B.data):
        return FormBoundReport(0.0, mass_term=mass_term)
    shift = space.vol if mass_term else 0.0
    sigma, x, y, res = _top_singular(space, B, shift, tol, max_matvecs, seed)
    u = space.dirichlet_power(x, -0.5, shift)
    v = space.dirichlet_power(y, -0.5, shift)
    return FormBoundReport(
        sigma,
        _embed(space, u),
        _embed(space, v),
        res.matvecs,
        res.residual,
        res.converged,
        mass_term=mass_term,
    )


# accretivity ------------------------------------------------------------

def _pencil_extreme(space, Mq: sp.spmatrix, S: sp.spmatrix, tol, cap, seed) -> float:
    """``sup u^T Mq u / u^T S u`` for S positive definite, by safeguarded Newton on
    ``psi(r) = lambda_max(K^{-1/2} (Mq - r S) K^{-1/2})``, which is convex and decreasing."""

    def psi(r):
        A = (Mq - r * S).tocsr()
        res = extreme_eigenpair(
            lambda x: space.dirichlet_power(A @ space.dirichlet_power(x, -0.5), -0.5),
            space.size, "largest", tol=tol, max_matvecs=cap, seed=seed,
        )
        u = space.dirichlet_power(res.vector, -0.5)
        return res.value, float(u @ (S @ u))

    top_q, _ = psi(0.0)
    # S is sandwiched between multiples of K on the grid
    lo_s = extreme_eigenpair(
        lambda x: space.dirichlet_power(S @ space.dirichlet_power(x, -0.5), -0.5),
        space.size, "smallest", tol=tol, max_matvecs=cap, seed=seed,
    ).value
    hi_s = extreme_eigenpair(
        lambda x: space.dirichlet_power(S @ space.dirichlet_power(x, -0.5), -0.5),
        space.size, "largest", tol=tol, max_matvecs=cap, seed=seed,
    ).value
    if lo_s <= 0:
        return math.inf
    a, b = sorted((top_q / lo_s, top_q / hi_s))
    if abs(b - a) <= 1e-14 * max(1.0, abs(b)):
        return b
    r = a
    for _ in range(60):
        val, slope = psi(r)
        if abs(val) <= 1e-12 * max(1.0, abs(r)):
            return r
        if val > 0:
            a = max(a, r)
        else:
            b = min(b, r)
        step = r + val / slope if slope > 0 else 0.5 * (a + b)
        r = step if a < step < b else 0.5 * (a + b)
        if b - a <= 1e-12 * max(1.0, abs(b)):
            break
    return r


def _ratio_bounds(rs: ReducedSymbols, space: TestSpace, tol, cap, seed) -> tuple[float | None, float | None]:
    if rs.m <= 0:
        return None, None
    S = space.stiffness(rs.P.values)
    Ms = space.mass(rs.sigma.values, rs.atoms)
    if not np.any(Ms.data):
        return 0.0, 0.0
    upper = _pencil_extreme(space, Ms, S, tol, cap, seed)
    lower = -_pencil_extreme(space, -Ms, S, tol, cap, seed)
    return upper, max(0.0, -lower)


def _negative_direction(rs: ReducedSymbols) -> tuple[list[float], list[int], float]:
    g = rs.grid
    mats = np.moveaxis(rs.P.values.reshape(g.dim, g.dim, -1), -1, 0)
    w, vecs = np.linalg.eigh(mats)
    flat = int(np.argmin(w[:, 0]))
    loc = [int(i) for i in np.unravel_index(flat, g.shape)]
    return [float(x) for x in vecs[flat, :, 0]], loc, float(w[flat, 0])


def _hermitian_min(space: TestSpace, H: sp.spmatrix, tol, cap, seed) -> EigResult:
    cplx = np.iscomplexobj(H.data)

    def op(x):
        return space.dirichlet_power(H @ space.dirichlet_power(x, -0.5), -0.5)

    return extreme_eigenpair(op, space.size, "smallest", np.complex128 if cplx else np.float64, tol, cap, seed=seed)


def accretivity_min(
    cs: CoefficientSet,
    bounds: bool = True,
    tol: float = DEFAULT_TOL,
    max_matvecs: int = DEFAULT_CAP,
    seed: int = 0,
    p_tol: float = 1e-10,
) -> AccretivityReport:
    """``inf Re<-Lu, u> / ||grad u||^2`` over the Dirichlet space.

    The Hermitian part of the discrete ``-L`` is assembled from the reduced
    operator ``div(P grad) + 2i d . grad + sigma``; both carry the same real
    part of the form.
    """
    rs = reduce_symbols(cs)
    if rs.m < -p_tol * max(1.0, abs(rs.M)):
        xi, loc, lam = _negative_direction(rs)
        return AccretivityReport(-math.inf, "not", direction=xi, location=loc, extra={"P_min_eigenvalue": lam})
    space = TestSpace(cs.grid)
    B = form_matrix(space, rs.operator())
    H = (-0.5 * (B + B.conj().T)).tocsr()
    if not np.any(rs.d.values):
        H = sp.csr_matrix(H.real)
    res = _hermitian_min(space, H, tol, max_matvecs, seed)
    u = space.dirichlet_power(res.vector, -0.5)
    upper, lower = _ratio_bounds(rs, space, tol, max_matvecs, seed) if bounds else (None, None)
    return AccretivityReport(
        res.value,
        _verdict(res.value, res.converged),
        _embed(space, u),
        upper,
        lower,
        res.matvecs,
        res.residual,
        res.converged,
    )


def schrodinger_positivity(
    P: MatrixField,
    sigma: ScalarField,
    atoms: Sequence[tuple[float, float]] = (),
    tol: float = DEFAULT_TOL,
    max_matvecs: int = DEFAULT_CAP,
    seed: int = 0,
) -> AccretivityReport:
    """``inf (<P grad h, grad h> - <sigma h, h>) / ||grad h||^2`` over real h."""
    space = TestSpace(P.grid)
    H = (space.stiffness(P.values.real) - space.mass(np.real(sigma.values), atoms)).tocsr()
    res = _hermitian_min(space, H, tol, max_matvecs, seed)
    u = space.dirichlet_power(res.vector, -0.5)
    if np.sum(u) < 0:
        u = -u
    return AccretivityReport(
        res.value,
        _verdict(res.value, res.converged),
        _embed(space, u),
        iterations=res.matvecs,
        residual=res.residual,
        converged=res.converged,
    )


# commutator -------------------------------------------------------------

def commutator_constant(
    d: VectorField,
    tol: float = DEFAULT_TOL,
    max_matvecs: int = DEFAULT_CAP,
    seed: int = 0,
) -> FormBoundReport:
    """Best C in ``|int d . (u grad v - v grad u)| <= C ||grad u|| ||grad v||`` over real pairs."""
    space = TestSpace(d.grid)
    C = space.commutator(np.real(d.values))
    rng = np.random.default_rng(seed)
    probe = rng.standard_normal(space.size)
    defect = abs(probe @ (C @ probe)) / max(1e-300, float(np.abs(probe) @ (abs(C) @ np.abs(probe))))
    if defect > 1e-12:
        raise RuntimeError(f"commutator form is not antisymmetric (defect {defect:.2e})")
    if C.nnz == 0 or not np.any(C.data):
        return FormBoundReport(0.0, extra={"antisymmetry_defect": 0.0})
    sigma, x, y, res = _top_singular(space, C, 0.0, tol, max_matvecs, seed)
    u = space.dirichlet_power(x, -0.5)
    v = space.dirichlet_power(y, -0.5)
    wdef = abs(u @ (C @ u)) / max(1e-300, float(u @ (space.dirichlet_matrix() @ u)))
    if wdef > 1e-12 * max(1.0, sigma):
        raise RuntimeError(f"commutator form does not vanish on the diagonal (defect {wdef:.2e})")
    return FormBoundReport(
        sigma, _embed(space, u), _embed(space, v), res.matvecs, res.residual, res.converged,
        extra={"antisymmetry_defect": max(defect, wdef)},
    )


@dataclass
class CrosscheckReport:
    k_direct: float
    k_decomp: float
    bmo_part: float
    trace_part: float
    mean_norm: float
    ratio: float
    window: float
    within_window: bool

    def summary(self) -> dict:
        return dict(self.__dict__)


def criterion_crosscheck(d: VectorField, window: float = 50.0, tol: float = DEFAULT_TOL, seed: int = 0) -> CrosscheckReport:
    """Compare the direct commutator constant with the size of the Hodge parts of d.

    ``K_decomp = bmo(F) + trace_norm(|grad f|^2)``; the torus mean of d is
    reported separately and not counted.
    """
    direct = commutator_constant(d, tol=tol, seed=seed).constant
    parts = hodge_decompose(VectorField(d.grid, np.real(d.values)))
    bmo = bmo_norm(parts.F).value
    tr = trace_norm(parts.c_irr.norm_squared(), tol=tol, seed=seed).value
    decomp = bmo + tr
    if direct == 0 and decomp == 0:
        ratio = 1.0
    elif decomp == 0:
        ratio = math.inf
    else:
        ratio = direct / decomp
    mean_norm = float(np.linalg.norm(np.real(parts.mean)))
    ok = 1.0 / window <= ratio <= window
    return CrosscheckReport(direct, decomp, bmo, tr, mean_norm, ratio, window, ok)


# subordination ----------------------------------------------------------

def _infinitesimal(space: TestSpace, Mq: sp.spmatrix, eps: float, tol, cap, seed) -> float:
    """``max(0, lambda_max(+-Mq - eps K))`` with respect to the lumped L2 mass.

    Direct Lanczos on ``Mq - eps K`` stalls because the wanted eigenvalue sits
    next to the huge negative spectrum of ``-eps K``. Instead, with
    ``W(l) = eps K + l vol I`` and ``psi(l) = lambda_max(W^{-1/2} Mq W^{-1/2})``,
    the answer is the root of ``psi(l) = 1``. The Rayleigh quotient of the
    top pencil vector is always a lower bound and ``psi(l) <= 1`` certifies an
    upper bound, so the iteration keeps a bracket and returns its lower end.
    """
    vol = space.vol
    best = 0.0
    for sgn in (1.0, -1.0):
        B = (sgn * Mq).tocsr()
        if B.nnz == 0:
            continue
        top = extreme_eigenpair(lambda x: B @ x, space.size, "largest", tol=tol, max_matvecs=cap, seed=seed)
        hi = top.value / vol
        if hi <= 0:
            continue
        lo, lam = 0.0, hi
        for _ in range(100):
            shift = lam * vol / eps
            res = extreme_eigenpair(
                lambda x: space.dirichlet_power(B @ space.dirichlet_power(x, -0.5, shift), -0.5, shift) / eps,
                space.size, "largest", tol=tol, max_matvecs=cap, seed=seed,
            )
            psi = res.value
            x = space.dirichlet_power(res.vector, -0.5, shift)
            xx = float(x @ x)
            xKx = float(x @ (space.dirichlet_matrix() @ x))
            lo = max(lo, (float(x @ (B @ x)) - eps * xKx) / (vol * xx))
            if psi <= 1.0:
                hi = min(hi, lam)
            if hi - lo <= tol * hi or (abs(psi - 1.0) <= tol and lam - lo <= tol * lam):
                break
            # Newton step on psi(l) = 1, kept inside the bracket
            dpsi = -psi * vol * xx / (eps * xKx + lam * vol * xx)
            nxt = lam - (psi - 1.0) / dpsi if dpsi < 0 else 0.5 * (lo + hi)
            lam = nxt if lo <= nxt <= hi else 0.5 * (lo + hi)
        best = max(best, lo)
    return best


def _dilation_sweep(q: ScalarField, p: float, norm: str, seeds: Sequence[int], scales: Sequence[float], band: int):
    g = q.grid
    vol = g.cell_volume
    rng = np.random.default_rng(12345)
    best, wit = 0.0, {}
    i0, i1 = g.inner_bounds
    half = 0.5 * (i1 - i0) * min(g.h)
    for seed in seeds:
        for s in scales:
            room = half * (1 - s)
            centre = g.inner_center + rng.uniform(-room, room, size=g.dim)
            u = make_test_function(g, seed, band, scale=s, center=centre)
            num = abs(np.sum(q.values * np.abs(u.values) ** 2) * vol)
            gn2 = grad(u).norm_squared().integral().real
            if norm == "l2":
                base = math.sqrt(np.sum(np.abs(u.values) ** 2) * vol)
            else:
                base = float(np.sum(np.abs(u.values)) * vol)
            den = gn2**p * base ** (2 * (1 - p))
            if den > 0 and num / den > best:
                best = num / den
                wit = {"seed": int(seed), "scale": float(s), "center": [float(c) for c in centre]}
    return best, wit


def subordination_profile(
    q: ScalarField,
    mode: str = "infinitesimal",
    epsilons: Sequence[float] | None = None,
    p: float | None = None,
    atoms: Sequence[tuple[float, float]] = (),
    seeds: Sequence[int] = tuple(range(8)),
    scales: Sequence[float] | None = None,
    band: int = 2,
    tol: float = DEFAULT_TOL,
    max_matvecs: int = DEFAULT_CAP,
    seed: int = 0,
) -> SubordinationReport:
    """Infinitesimal form bound profile C(eps), its power fit, or p-subordination constants.

    The infinitesimal modes work on all grid functions of the torus so that
    the constant function is admissible and constant q gives ``C = |q|``.
    """
    if mode in ("infinitesimal", "trudinger"):
        if epsilons is None:
            epsilons = list(np.logspace(-3, -1, 9))
        epsilons = sorted(float(e) for e in epsilons)
        if not epsilons:
            raise ValueError("empty epsilon list")
        if min(epsilons) <= 0:
            raise ValueError("epsilons must be positive")
        space = TestSpace(q.grid, periodic=True)
        Mq = space.mass(np.real(q.values), atoms)
        consts = [_infinitesimal(space, Mq, e, tol, max_matvecs, seed) for e in epsilons]
        # exact monotonicity: C(eps) is an infimum over a shrinking family
        consts = list(np.minimum.accumulate(consts))
        rep = SubordinationReport(mode, epsilons, [float(c) for c in consts])
        if mode == "trudinger":
            pos = [(e, c) for e, c in zip(epsilons, consts) if c > 0]
            if len(pos) < 2:
                rep.fitted_beta, rep.prefactor = 0.0, (pos[0][1] if pos else 0.0)
            else:
                x = -np.log([e for e, _ in pos])
                y = np.log([c for _, c in pos])
                beta, logc = np.polyfit(x, y, 1)
                if abs(beta) < 1e-12:
                    beta = 0.0
                rep.fitted_beta, rep.prefactor = float(max(beta, 0.0)), float(math.exp(logc))
        return rep
    if mode in ("p_subordination", "nash"):
        if p is None or not 0 < p < 1:
            raise ValueError("p must lie in (0, 1)")
        if scales is None:
            scales = [2.0**-k for k in range(4)]
        best, wit = _dilation_sweep(q, p, "l2" if mode == "p_subordination" else "l1", seeds, scales, band)
        return SubordinationReport(mode, p=p, p_constant=best, witness=wit)
    raise ValueError(f"unknown mode {mode!r}")


# magnetic form ----------------------------------------------------------

def magnetic_coefficients(a: VectorField, q: ScalarField) -> CoefficientSet:
    """Coefficients with ``sesquilinear(cs, u, v) = <(i grad + a) u, (i grad + a) v> + <q u, v>``."""
    g = a.grid
    a = VectorField(g, np.real(a.values))
    c = 1j * div(a).values + a.norm_squared().values + q.values
    return CoefficientSet(MatrixField.identity(g, -1.0), VectorField(g, 2j * a.values), ScalarField(g, c))


def magnetic_form(a: VectorField, q: ScalarField, u: ScalarField, v: ScalarField) -> complex:
    """``<(i grad + a) u, (i grad + a) v> + <q u, v>`` by spectral differentiation."""
    a_re = np.real(a.values)
    du = 1j * grad(u).values + a_re * u.values
    dv = 1j * grad(v).values + a_re * v.values
    vol = u.grid.cell_volume
    return complex(np.sum(du * np.conj(dv)) + np.sum(q.values * u.values * np.conj(v.values))) * vol


@dataclass
class ComparabilityReport:
    magnetic: float
    potential: float
    drift: float
    ratio: float
    window: float
    within_window: bool
    mass_term: bool

    def summary(self) -> dict:
        return dict(self.__dict__)


def magnetic_comparability(
    a: VectorField,
    q: ScalarField,
    mass_term: bool = False,
    window: float = 50.0,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> ComparabilityReport:
    """Form bound of the magnetic perturbation against its potential and drift pieces.

    The Dirichlet part of the magnetic form is bounded with constant one, so
    the comparison is made on ``M + Laplacian``: drift ``2i a`` and potential
    ``i div a + |a|^2 + q``, against ``q + |a|^2`` and ``a . grad``.
    """
    g = a.grid
    a = VectorField(g, np.real(a.values))
    full = magnetic_coefficients(a, q)
    pert = CoefficientSet.build(g, b=full.b, c=full.c)
    pot = CoefficientSet.build(g, c=q + a.norm_squared())
    drift = CoefficientSet.build(g, b=a)
    cm = form_bound_constant(pert, mass_term, tol, seed=seed).constant
    cp = form_bound_constant(pot, mass_term, tol, seed=seed).constant
    cd = form_bound_constant(drift, mass_term, tol, seed=seed).constant
    ref = max(cp, cd)
    if cm == 0 and ref == 0:
        ratio = 1.0
    elif ref == 0:
        ratio = math.inf
    else:
        ratio = cm / ref
    return ComparabilityReport(cm, cp, cd, ratio, window, 1.0 / window <= ratio <= window, mass_term)
