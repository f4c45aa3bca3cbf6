"""Independent reference computations.

Dense matrices are assembled element by element with plain loops over
cells and corners, then handed to numpy/scipy dense eigen/singular value
routines. Nothing here goes through the package's sparse assembly, Lanczos
solver or sine transforms.
"""
from __future__ import annotations

import itertools

import numpy as np
import scipy.linalg as sla


def inner_nodes(grid):
    """Grid indices of the Dirichlet unknowns (row-major), and the closed lattice index range."""
    i0, i1 = grid.inner_bounds
    axis = list(range(i0 + 1, i1))
    return list(itertools.product(axis, repeat=grid.dim)), (i0, i1)


def _unknown_map(grid):
    nodes, (i0, i1) = inner_nodes(grid)
    return {n: k for k, n in enumerate(nodes)}, (i0, i1), len(nodes)


def assemble_dense(grid, A=None, b=None, c=None):
    """Dense matrices ``S`` (stiffness of A), ``X`` (drift of b) and ``M`` (lumped mass of c).

    Vertex quadrature: each cell gives weight ``vol / 2^n`` to each corner;
    the gradient at a corner uses the cell edges leaving that corner.
    """
    idx, (i0, i1), size = _unknown_map(grid)
    dim = grid.dim
    h = grid.h
    vol = grid.cell_volume
    n = grid.points_per_axis
    wt = vol / 2**dim
    cplx = any(x is not None and np.iscomplexobj(x) for x in (A, b, c))
    dt = complex if cplx else float
    S = np.zeros((size, size), dtype=dt)
    X = np.zeros((size, size), dtype=dt)
    M = np.zeros((size, size), dtype=dt)
    for cell in itertools.product(range(i0, i1), repeat=dim):
        for o in itertools.product((0, 1), repeat=dim):
            node = tuple(cell[j] + o[j] for j in range(dim))
            gnode = tuple(x % n for x in node)
            # gradient at this corner: list of (unknown id, coefficient) per axis
            grads = []
            for j in range(dim):
                lo = list(node)
                lo[j] = cell[j]
                hi = list(lo)
                hi[j] = cell[j] + 1
                terms = []
                if tuple(hi) in idx:
                    terms.append((idx[tuple(hi)], 1.0 / h[j]))
                if tuple(lo) in idx:
                    terms.append((idx[tuple(lo)], -1.0 / h[j]))
                grads.append(terms)
            if A is not None:
                for j in range(dim):
                    for k in range(dim):
                        a = A[(j, k) + gnode]
                        for r, cr in grads[j]:
                            for s, cs in grads[k]:
                                S[r, s] += wt * a * cr * cs
            if b is not None and node in idx:
                me = idx[node]
                for j in range(dim):
                    bj = b[(j,) + gnode]
                    for s, cs in grads[j]:
                        X[me, s] += wt * bj * cs
    if c is not None:
        for node, k in idx.items():
            M[k, k] = vol * c[node]
    return S, X, M


def dirichlet_dense(grid):
    A = np.zeros((grid.dim, grid.dim, *grid.shape))
    for j in range(grid.dim):
        A[j, j] = 1.0
    return assemble_dense(grid, A=A)[0]


def _inv_sqrt(K):
    w, V = np.linalg.eigh(K)
    return (V / np.sqrt(w)) @ V.conj().T


def form_bound_oracle(grid, A, b, c, mass_term=False):
    S, X, M = assemble_dense(grid, A, b, c)
    B = -S + X + M
    K = dirichlet_dense(grid)
    if mass_term:
        K = K + grid.cell_volume * np.eye(K.shape[0])
    W = _inv_sqrt(K)
    return float(np.linalg.svd(W @ B @ W, compute_uv=False)[0])


def hermitian_min_oracle(grid, A, b, c):
    """Smallest eigenvalue of the Hermitian part of ``-B`` in the Dirichlet-normalized basis."""
    S, X, M = assemble_dense(grid, A, b, c)
    B = -S + X + M
    H = -0.5 * (B + B.conj().T)
    W = _inv_sqrt(dirichlet_dense(grid))
    return float(np.linalg.eigvalsh(W @ H @ W)[0])


def commutator_oracle(grid, d):
    _, X, _ = assemble_dense(grid, b=np.real(d))
    C = X - X.T
    W = _inv_sqrt(dirichlet_dense(grid))
    return float(np.linalg.svd(W @ C @ W, compute_uv=False)[0])


def trace_norm_oracle(grid, mu):
    _, _, M = assemble_dense(grid, c=np.real(mu))
    K = dirichlet_dense(grid)
    lam = sla.eigh(M, K, eigvals_only=True)
    return float(np.sqrt(max(lam[-1], 0.0)))


def fd_gradient(values, grid):
    """Second-order centred differences on the torus."""
    return np.stack([(np.roll(values, -1, axis=j) - np.roll(values, 1, axis=j)) / (2 * grid.h[j]) for j in range(grid.dim)])


def brute_force_bmo(values):
    """Mean oscillation over every dyadic cube, by explicit loops over cubes."""
    n = values.shape[0]
    dim = values.ndim
    best = 0.0
    side = n
    while side >= 2:
        for corner in itertools.product(range(0, n, side), repeat=dim):
            cube = values[tuple(slice(c, c + side) for c in corner)]
            best = max(best, float(np.mean(np.abs(cube - cube.mean()))))
        side //= 2
    return best


def radial_hardy_threshold(T: float, cells: int = 4000) -> float:
    """Least ``lambda`` with ``int u'^2 r^2 dr = lambda int u^2 dr`` on ``(e^-T, 1)``, Dirichlet at both ends.

    P1 elements on a geometric mesh; the exact value is ``1/4 + pi^2 / T^2``.
    """
    r = np.exp(np.linspace(-T, 0.0, cells + 1))
    hloc = np.diff(r)
    n = cells - 1
    K = np.zeros((n, n))
    Mm = np.zeros((n, n))
    for e in range(cells):
        a, bnd = r[e], r[e + 1]
        he = hloc[e]
        # int r^2 over the element (exact), then P1 gradients
        k = (bnd**3 - a**3) / 3.0 / he**2
        # int phi_i phi_j / 1 dr exact for P1
        m = he / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
        kl = k * np.array([[1.0, -1.0], [-1.0, 1.0]])
        ids = [e - 1, e]
        for p, ip in enumerate(ids):
            for q, iq in enumerate(ids):
                if 0 <= ip < n and 0 <= iq < n:
                    K[ip, iq] += kl[p, q]
                    Mm[ip, iq] += m[p, q]
    return float(sla.eigh(K, Mm, eigvals_only=True, subset_by_index=[0, 0])[0])


def spectral_derivative(values, grid, axis):
    """Fourier derivative along one axis, Nyquist mode dropped; plain numpy FFT."""
    n = grid.points_per_axis
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=grid.h[axis])
    k[n // 2] = 0.0
    shape = [1] * values.ndim
    shape[axis] = n
    out = np.fft.ifft(np.fft.fft(values, axis=axis) * (1j * k).reshape(shape), axis=axis)
    return out if np.iscomplexobj(values) else out.real


def reduced_symbols_oracle(grid, A, b, c):
    """``P = Re sym A``, ``d = (Im b - Div Im skew A) / 2``, ``sigma = Re c - div(Re b) / 2`` by loops."""
    dim = grid.dim
    P = np.zeros((dim, dim, *grid.shape))
    d = np.zeros((dim, *grid.shape))
    for j in range(dim):
        for k in range(dim):
            P[j, k] = 0.5 * np.real(A[j, k] + A[k, j])
    for j in range(dim):
        d[j] = 0.5 * np.imag(b[j])
        for k in range(dim):
            skew = 0.5 * np.imag(A[j, k] - A[k, j])
            d[j] -= 0.5 * np.real(spectral_derivative(skew, grid, k))
    sigma = np.real(c).copy()
    for j in range(dim):
        sigma -= 0.5 * np.real(spectral_derivative(np.real(b[j]), grid, j))
    return P, d, sigma


def accretivity_oracle(grid, A, b, c):
    """Smallest eigenvalue of the Hermitian part of the reduced ``-L`` in the Dirichlet-normalized basis."""
    P, d, sigma = reduced_symbols_oracle(grid, A, b, c)
    return hermitian_min_oracle(grid, P, 2j * d, sigma)
