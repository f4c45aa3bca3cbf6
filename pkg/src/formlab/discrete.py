"""Discrete test spaces and form matrices.

Suprema over compactly supported test functions are taken over grid
functions on the inner sub-box that vanish on its boundary nodes (the
Dirichlet space), or over all grid functions of the torus (the periodic
space). Forms are assembled with vertex quadrature on the cells of the
lattice: every cell contributes ``h^n / 2^n`` times the integrand at each of
its corners, with the gradient at a corner built from the one-sided edge
differences leaving that corner. For the identity matrix this reproduces
the standard ``2n+1`` point Dirichlet form, which the type-I sine transform
diagonalizes on the Dirichlet space.
"""
from __future__ import annotations

import itertools
from functools import cached_property

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sp

from .grid import Grid, fft_workers

__all__ = ["TestSpace"]


def _tridiag(m: int, periodic: bool) -> sp.csr_matrix:
    main = 2.0 * np.ones(m)
    off = -np.ones(m - 1)
    T = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    if periodic:
        T[0, m - 1] += -1.0
        T[m - 1, 0] += -1.0
    return T.tocsr()


class TestSpace:
    """Grid functions on the inner box with zero boundary values, or on the whole torus."""

    __test__ = False  # not a pytest class

    def __init__(self, grid: Grid, periodic: bool = False) -> None:
        self.grid = grid
        self.periodic = periodic
        n = grid.points_per_axis
        dim = grid.dim
        if periodic:
            cells = n
            node_global = np.arange(n + 1) % n
            node_unknown = node_global.copy()
            self.m = n
        else:
            i0, i1 = grid.inner_bounds
            self.m = i1 - i0 - 1
            if self.m < 1:
                raise ValueError("inner sub-box holds no interior node")
            cells = self.m + 1
            node_global = (i0 + np.arange(cells + 1)) % n
            node_unknown = np.arange(cells + 1) - 1
            node_unknown[0] = -1
            node_unknown[-1] = -1
        self.cells_per_axis = cells
        self._dirichlet = None
        self.node_global = node_global
        self.dim = dim
        self.h = grid.h
        self.vol = grid.cell_volume
        self.shape = (self.m,) * dim
        self.size = self.m**dim
        # flat unknown id on the closed lattice, -1 on boundary nodes
        per_axis = np.meshgrid(*([node_unknown] * dim), indexing="ij")
        valid = np.all(np.stack([a >= 0 for a in per_axis]), axis=0)
        uid = np.full(valid.shape, -1, dtype=np.int64)
        uid[valid] = np.ravel_multi_index(tuple(a[valid] for a in per_axis), self.shape)
        self._uid = uid
        glob = np.meshgrid(*([node_global] * dim), indexing="ij")
        gid = np.ravel_multi_index(tuple(glob), grid.shape)
        self._gid = gid
        # on the torus the last lattice layer repeats the first; keep one copy
        _, first = np.unique(uid[valid], return_index=True)
        self.unknown_global = gid[valid][first]

    # sampling ---------------------------------------------------------
    def lattice(self, values: np.ndarray) -> np.ndarray:
        """Samples of a grid array on the closed lattice, leading axes kept."""
        values = np.asarray(values)
        lead = values.shape[: values.ndim - self.dim]
        flat = values.reshape(*lead, -1)
        return flat[..., self._gid]

    def restrict(self, values: np.ndarray) -> np.ndarray:
        """Samples at the unknowns, in unknown order."""
        values = np.asarray(values)
        lead = values.shape[: values.ndim - self.dim]
        return values.reshape(*lead, -1)[..., self.unknown_global]

    def embed(self, w: np.ndarray) -> np.ndarray:
        """Grid array carrying ``w`` at the unknowns and zero elsewhere."""
        out = np.zeros(self.grid.size, dtype=np.result_type(w, np.float64))
        out[self.unknown_global] = w
        return out.reshape(self.grid.shape)

    def local_coordinates(self) -> np.ndarray:
        """Coordinates of the unknowns relative to the lower lattice corner, shape (dim, size)."""
        if self.periodic:
            idx = np.unravel_index(np.arange(self.size), self.shape)
            return np.stack([i * hj for i, hj in zip(idx, self.h)])
        idx = np.unravel_index(np.arange(self.size), self.shape)
        return np.stack([(i + 1) * hj for i, hj in zip(idx, self.h)])

    # corner operators ---------------------------------------------------
    def _corner_slice(self, o) -> tuple[slice, ...]:
        L = self.cells_per_axis
        return tuple(slice(oj, oj + L) for oj in o)

    def corner_values(self, lat: np.ndarray, o) -> np.ndarray:
        """Values at corner ``o`` of every cell, flattened over cells."""
        s = self._corner_slice(o)
        lead = lat.shape[: lat.ndim - self.dim]
        return lat[(Ellipsis, *s)].reshape(*lead, -1)

    @cached_property
    def ncells(self) -> int:
        return self.cells_per_axis**self.dim

    def _select(self, o) -> sp.csr_matrix:
        ids = self._uid[self._corner_slice(o)].ravel()
        rows = np.nonzero(ids >= 0)[0]
        return sp.csr_matrix((np.ones(rows.size), (rows, ids[rows])), shape=(self.ncells, self.size))

    @cached_property
    def _selectors(self) -> dict:
        return {o: self._select(o) for o in itertools.product((0, 1), repeat=self.dim)}

    @cached_property
    def _differences(self) -> dict:
        out = {}
        for o in itertools.product((0, 1), repeat=self.dim):
            for j in range(self.dim):
                lo = list(o)
                lo[j] = 0
                hi = list(lo)
                hi[j] = 1
                key = (tuple(lo), j)
                if key not in out:
                    out[key] = (self._selectors[tuple(hi)] - self._selectors[tuple(lo)]) / self.h[j]
        return out

    def corner_gradient(self, o, j: int) -> sp.csr_matrix:
        lo = list(o)
        lo[j] = 0
        return self._differences[(tuple(lo), j)]

    # edge operators -----------------------------------------------------
    def edges(self, j: int) -> tuple[np.ndarray, np.ndarray, tuple[np.ndarray, np.ndarray]]:
        """Edges along axis j: unknown ids of both ends (-1 for boundary) and lattice index of the lower end."""
        L = self.cells_per_axis
        # on the torus the last lattice layer repeats the first one
        full = slice(0, L) if self.periodic else slice(0, L + 1)
        lo = [full] * self.dim
        hi = [full] * self.dim
        lo[j] = slice(0, L)
        hi[j] = slice(1, L + 1)
        a = self._uid[tuple(lo)]
        b = self._uid[tuple(hi)]
        keep = (a >= 0) | (b >= 0)
        return a[keep], b[keep], (tuple(lo), tuple(hi), keep)

    def edge_difference(self, j: int) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray]:
        a, b, _ = self.edges(j)
        rows = np.arange(a.size)
        ra, ca = rows[a >= 0], a[a >= 0]
        rb, cb = rows[b >= 0], b[b >= 0]
        data = np.concatenate([-np.ones(ra.size), np.ones(rb.size)])
        D = sp.csr_matrix((data, (np.concatenate([ra, rb]), np.concatenate([ca, cb]))), shape=(a.size, self.size))
        return D, a, b

    def edge_average(self, node_values: np.ndarray, j: int) -> np.ndarray:
        """Mean of a grid array over the two ends of every kept edge along j."""
        lat = self.lattice(node_values)
        _, _, (lo, hi, keep) = self.edges(j)
        return 0.5 * (lat[lo] + lat[hi])[keep]

    # forms --------------------------------------------------------------
    def dirichlet_matrix(self) -> sp.csr_matrix:
        """``sum_j (h^n / h_j^2) D_j^T D_j``: the form of the identity matrix."""
        if self._dirichlet is None:
            self._dirichlet = self._assemble_dirichlet()
        return self._dirichlet

    def _assemble_dirichlet(self) -> sp.csr_matrix:
        K = sp.csr_matrix((self.size, self.size))
        for j in range(self.dim):
            mats = [sp.identity(self.m, format="csr")] * self.dim
            mats[j] = _tridiag(self.m, self.periodic)
            term = mats[0]
            for M in mats[1:]:
                term = sp.kron(term, M, format="csr")
            K = K + (self.vol / self.h[j] ** 2) * term
        return K.tocsr()

    def stiffness(self, A: np.ndarray) -> sp.csr_matrix:
        """Matrix S with ``v^* S u = <A grad u, grad v>`` for a grid matrix array A."""
        A = np.asarray(A)
        dim = self.dim
        offdiag = any(np.any(A[j, k] != 0) for j in range(dim) for k in range(dim) if j != k)
        if not offdiag:
            S = None
            for j in range(dim):
                D, _, _ = self.edge_difference(j)
                w = self.edge_average(A[j, j], j) * self.vol / self.h[j] ** 2
                term = D.T @ sp.diags(w) @ D
                S = term if S is None else S + term
            return S.tocsr()
        lat = self.lattice(A)
        wt = self.vol / 2**dim
        S = None
        for o in itertools.product((0, 1), repeat=dim):
            vals = self.corner_values(lat, o)
            for j in range(dim):
                Gj = self.corner_gradient(o, j)
                for k in range(dim):
                    a = vals[j, k]
                    if not np.any(a):
                        continue
                    term = Gj.T @ sp.diags(wt * a) @ self.corner_gradient(o, k)
                    S = term if S is None else S + term
        if S is None:
            return sp.csr_matrix((self.size, self.size))
        return S.tocsr()

    def drift(self, b: np.ndarray) -> sp.csr_matrix:
        """Matrix with ``v^* X u = <b . grad u, v>``."""
        b = np.asarray(b)
        lat = self.lattice(b)
        wt = self.vol / 2**self.dim
        X = sp.csr_matrix((self.size, self.size), dtype=np.result_type(b, np.float64))
        for o in itertools.product((0, 1), repeat=self.dim):
            vals = self.corner_values(lat, o)
            E = self._selectors[o]
            for j in range(self.dim):
                if not np.any(vals[j]):
                    continue
                X = X + E.T @ sp.diags(wt * vals[j]) @ self.corner_gradient(o, j)
        return X.tocsr()

    def commutator(self, d: np.ndarray) -> sp.csr_matrix:
        """Real antisymmetric C with ``u^T C v = int d . (u grad v - v grad u)``."""
        X = self.drift(np.asarray(d).real)
        return (X - X.T).tocsr()

    def hat_weights(self, x: float) -> list[tuple[int, float]]:
        """Unknown ids and weights of the piecewise linear interpolant at physical ``x`` (1D)."""
        if self.dim != 1:
            raise ValueError("point masses are only supported in one dimension")
        h = self.h[0]
        n = self.grid.points_per_axis
        start = 0 if self.periodic else self.grid.inner_bounds[0]
        t = ((x / h - start) % n) if self.periodic else (x / h - start)
        i = int(np.floor(t))
        theta = t - i
        out = []
        for node, wgt in ((i, 1.0 - theta), (i + 1, theta)):
            if wgt == 0.0:
                continue
            if self.periodic:
                out.append((node % n, wgt))
            elif 1 <= node <= self.m:
                out.append((node - 1, wgt))
        return out

    def mass(self, c: np.ndarray | None = None, atoms=()) -> sp.csr_matrix:
        """Lumped mass matrix of ``<c u, v>``; atoms enter through hat interpolation."""
        if c is None:
            diag = np.full(self.size, self.vol)
        else:
            diag = self.vol * self.restrict(c)
        M = sp.diags(diag).tocsr()
        rows, cols, data = [], [], []
        for x, wgt in atoms:
            phi = self.hat_weights(x)
            for i, a in phi:
                for k, b in phi:
                    rows.append(k)
                    cols.append(i)
                    data.append(wgt * a * b)
        if data:
            M = M + sp.csr_matrix((np.array(data), (rows, cols)), shape=(self.size, self.size))
        return M.tocsr()

    # Dirichlet spectral calculus ----------------------------------------
    @cached_property
    def dirichlet_eigenvalues(self) -> np.ndarray:
        # sine basis on the Dirichlet space, Fourier basis on the torus
        k = np.arange(self.m) if self.periodic else np.arange(1, self.m + 1)
        period = self.m if self.periodic else 2.0 * (self.m + 1)
        lam = np.zeros(self.shape)
        for j, hj in enumerate(self.h):
            s = (4.0 / hj**2) * np.sin(np.pi * k / period) ** 2
            shp = [1] * self.dim
            shp[j] = self.m
            lam = lam + s.reshape(shp)
        return self.vol * lam

    def dirichlet_power(self, x: np.ndarray, power: float, shift: float = 0.0) -> np.ndarray:
        """``(K + shift I)^power x`` through the orthonormal type-I sine transform.

        On the periodic space the stiffness matrix is circulant and the FFT is
        used instead; negative powers then need ``shift > 0``.
        """
        if self.periodic and power < 0 and shift <= 0:
            raise ValueError("the periodic stiffness matrix is singular; pass shift > 0")
        lam = (self.dirichlet_eigenvalues + shift) ** power
        workers = fft_workers()
        if self.periodic:
            y = sfft.ifftn(sfft.fftn(x.reshape(self.shape), workers=workers) * lam, workers=workers).ravel()
            return y if np.iscomplexobj(x) else y.real

        def one(r):
            y = sfft.dstn(r.reshape(self.shape), type=1, norm="ortho", workers=workers)
            return sfft.idstn(y * lam, type=1, norm="ortho", workers=workers).ravel()

        if np.iscomplexobj(x):
            return one(x.real) + 1j * one(x.imag)
        return one(x)
