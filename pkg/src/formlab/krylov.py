"""Thick-restart Lanczos for one extreme eigenpair of a Hermitian operator.

Only matrix-vector products are used. The basis is fully reorthogonalized
(two passes of classical Gram-Schmidt), which keeps the projected matrix
Hermitian to rounding and makes restarts safe.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)

__all__ = ["EigResult", "SolverCapReached", "extreme_eigenpair"]

DEFAULT_TOL = 1e-8
DEFAULT_CAP = 10_000


class SolverCapReached(RuntimeError):
    """The iteration cap was hit before the residual target."""


@dataclass
class EigResult:
    value: float
    vector: np.ndarray
    residual: float
    matvecs: int
    converged: bool


def _orthogonalize(V: np.ndarray, j: int, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    basis = V[:j]
    h = basis.conj() @ w
    w = w - h @ basis
    h2 = basis.conj() @ w
    w = w - h2 @ basis
    return w, h + h2


def extreme_eigenpair(
    apply: Callable[[np.ndarray], np.ndarray],
    n: int,
    which: str = "largest",
    dtype=np.float64,
    tol: float = DEFAULT_TOL,
    max_matvecs: int = DEFAULT_CAP,
    ncv: int = 32,
    seed: int = 0,
    v0: np.ndarray | None = None,
) -> EigResult:
    """Largest or smallest eigenpair of the Hermitian map ``apply``.

    Convergence: ``||A x - theta x|| <= tol * max(|theta|, 1e-4 * spread)``
    where ``spread`` is the largest Ritz magnitude seen, so eigenvalues near
    zero still get a scale. The returned vector has unit Euclidean norm.
    """
    if which not in ("largest", "smallest"):
        raise ValueError("which must be 'largest' or 'smallest'")
    if n <= 0:
        raise ValueError("empty operator")
    sign = 1.0 if which == "largest" else -1.0
    ncv = max(2, min(ncv, n))
    keep = max(1, ncv // 2)
    rng = np.random.default_rng(seed)
    cplx = np.issubdtype(np.dtype(dtype), np.complexfloating)

    def rand_vec() -> np.ndarray:
        x = rng.standard_normal(n)
        if cplx:
            x = x + 1j * rng.standard_normal(n)
        return x

    V = np.zeros((ncv + 1, n), dtype=np.complex128 if cplx else np.float64)
    x = rand_vec() if v0 is None else np.asarray(v0, dtype=V.dtype).copy()
    V[0] = x / np.linalg.norm(x)
    H = np.zeros((ncv, ncv), dtype=V.dtype)
    k = 0
    matvecs = 0
    spread = 0.0
    while True:
        m = ncv
        j = k
        beta = 0.0
        while j < ncv:
            if matvecs >= max_matvecs and j > 0:
                # cap reached inside a block: stop with the columns built so far
                m = j
                break
            w = apply(V[j])
            matvecs += 1
            w, h = _orthogonalize(V, j + 1, w)
            H[: j + 1, j] = h
            beta = float(np.linalg.norm(w))
            scale = max(float(np.abs(h).max()), spread, 1e-300)
            if beta <= 1e-13 * scale:
                # invariant subspace: restart the chain with a fresh direction
                found = False
                for _ in range(3):
                    r, _ = _orthogonalize(V, j + 1, rand_vec())
                    nr = np.linalg.norm(r)
                    if nr > 1e-8:
                        found = True
                        break
                if not found or j + 1 >= ncv:
                    m = j + 1
                    beta = 0.0
                    break
                V[j + 1] = r / nr
                if j + 1 < ncv:
                    H[j + 1, j] = 0.0
                beta = 0.0
                j += 1
                continue
            V[j + 1] = w / beta
            if j + 1 < ncv:
                H[j + 1, j] = beta
            j += 1
        T = H[:m, :m]
        T = 0.5 * (T + T.conj().T)
        theta, Y = np.linalg.eigh(T)
        order = np.argsort(-sign * theta)
        theta, Y = theta[order], Y[:, order]
        spread = max(spread, float(np.abs(theta).max()))
        resid = np.abs(beta * Y[m - 1, :])
        target = theta[0]
        denom = max(abs(target), 1e-4 * spread, 1e-300)
        rel = float(resid[0] / denom)
        if rel <= tol or beta == 0.0 or matvecs >= max_matvecs:
            vec = Y[:, 0] @ V[:m]
            vec = vec / np.linalg.norm(vec)
            conv = rel <= tol or beta == 0.0
            if not conv:
                log.warning("Lanczos stopped at the cap with relative residual %.3e", rel)
            return EigResult(float(target), vec, rel if beta else 0.0, matvecs, conv)
        # thick restart: keep the wanted Ritz vectors, continue from the residual direction
        k = min(keep, m - 1)
        Vk = Y[:, :k].T @ V[:m]
        V[:k] = Vk
        V[k] = V[m]
        H[:] = 0.0
        H[:k, :k] = np.diag(theta[:k])
        coupling = beta * Y[m - 1, :k]
        H[k, :k] = coupling
        H[:k, k] = np.conj(coupling)
