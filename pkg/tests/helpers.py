"""Seeded random inputs shared by the test modules."""
import numpy as np

from formlab import MatrixField, ScalarField, VectorField
from formlab.grid import band_limit_filter
from formlab.reduction import CoefficientSet


def smooth(grid, rng, lead=(), band=3, cplx=True):
    raw = rng.standard_normal((*lead, *grid.shape))
    if cplx:
        raw = raw + 1j * rng.standard_normal(raw.shape)
    return band_limit_filter(raw, grid, band, lead=len(lead))


def random_coefficients(grid, seed, cplx=True, form_tag="divergence", band=3, diag=2.0):
    rng = np.random.default_rng(seed)
    d = grid.dim
    A = smooth(grid, rng, (d, d), band, cplx)
    for j in range(d):
        A[j, j] = A[j, j] + diag
    b = smooth(grid, rng, (d,), band, cplx)
    c = smooth(grid, rng, (), band, cplx)
    return CoefficientSet(MatrixField(grid, A), VectorField(grid, b), ScalarField(grid, c), form_tag)


def random_vector(grid, seed, band=3, cplx=False):
    return VectorField(grid, smooth(grid, np.random.default_rng(seed), (grid.dim,), band, cplx))


def random_scalar(grid, seed, band=3, cplx=False):
    return ScalarField(grid, smooth(grid, np.random.default_rng(seed), (), band, cplx))


def positive_symmetric(grid, seed, floor=0.5, band=2):
    """Pointwise symmetric matrix field with eigenvalues at least ``floor``."""
    rng = np.random.default_rng(seed)
    d = grid.dim
    B = smooth(grid, rng, (d, d), band, cplx=False)
    B = B / max(1.0, np.max(np.abs(B)))
    P = np.einsum("ij...,kj...->ik...", B, B)
    for j in range(d):
        P[j, j] += floor
    return MatrixField(grid, P)


def inverse_distance_1d(grid):
    """``1/t`` with t the distance to the left edge of the inner box, zero for t <= 0."""
    x = grid.axes()[0]
    t = x - x[grid.inner_bounds[0]]
    return np.where(t > 0, 1.0 / np.where(t > 0, t, 1.0), 0.0)


def hardy_pair_1d(grid):
    """``(c, f)`` with ``c = 1/(4 t^2)`` and f the edge mean of ``-1/(2t)``, t measured from the inner-box left edge."""
    h = grid.h[0]
    t = (np.arange(grid.points_per_axis) - grid.inner_bounds[0]) * h
    pos = t > 0
    c = np.where(pos, 0.25 / np.where(pos, t, 1.0) ** 2, 0.0)
    f = np.where(pos, -np.log(np.where(pos, (t + h) / np.where(pos, t, 1.0), 1.0)) / (2 * h), 0.0)
    return c, f


def hardy_pair_nd(grid, scale=1.0):
    """``(sigma, g, r)``: ``sigma = |x|^-2 / 4`` and the edge means of ``g = x / (2|x|^2)`` around the inner-box centre."""
    from formlab.families import radial_distance

    d, r = radial_distance(grid)
    h = grid.h[0]
    g = np.zeros((grid.dim, *grid.shape))
    for j in range(grid.dim):
        rho2 = r**2 - d[j] ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            g[j] = np.log(((d[j] + h) ** 2 + rho2) / (d[j] ** 2 + rho2)) / (4 * h)
    g[~np.isfinite(g)] = 0.0
    sigma = 0.25 / np.maximum(r, 0.5 * h) ** 2
    return sigma, scale * g, r


# acceptance criterion -> list of (part, ok, detail); printed by the terminal summary hook
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def record(criterion: int, part: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))
