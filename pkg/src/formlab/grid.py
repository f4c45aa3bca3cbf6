"""Periodic grids, sampled fields and spectral calculus.

Derivatives are Fourier multipliers. The Nyquist symbol of a first
derivative is set to zero, and the Laplacian is defined as ``div(grad)``
so that the two agree exactly. Consequently the Laplacian also vanishes on
the Nyquist modes; ``inv_laplacian`` drops that content together with the
mean (see ``inv_laplacian``).
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "MatrixField",
    "GridMismatch",
    "grad",
    "div",
    "curl_matrix",
    "div_matrix_rows",
    "laplacian",
    "inv_laplacian",
    "make_test_function",
    "fft_workers",
]


class GridMismatch(ValueError):
    """Fields living on different grids were combined."""


def fft_workers() -> int:
    """Worker count for scipy.fft, capped by ``FORMLAB_THREADS``."""
    raw = os.environ.get("FORMLAB_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic box with ``points_per_axis**dim`` nodes.

    Node ``i`` along an axis sits at ``x = i * h``. Test functions live on the
    centred sub-box whose side is ``inner_support_fraction`` of the box.
    """

    dim: int
    points_per_axis: int
    side_length: float | tuple[float, ...] = 1.0
    inner_support_fraction: float = 0.5

    def __post_init__(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        n = int(self.points_per_axis)
        if n < 8 or n & (n - 1):
            raise ValueError(f"points_per_axis must be a power of two >= 8, got {n}")
        sides = self.side_length
        if np.isscalar(sides):
            sides = (float(sides),) * self.dim
        sides = tuple(float(s) for s in sides)
        if len(sides) != self.dim or min(sides) <= 0 or not all(map(math.isfinite, sides)):
            raise ValueError(f"side_length must be {self.dim} positive reals, got {self.side_length}")
        if not 0.0 < self.inner_support_fraction <= 1.0:
            raise ValueError("inner_support_fraction must lie in (0, 1]")
        object.__setattr__(self, "points_per_axis", n)
        object.__setattr__(self, "side_length", sides)

    # geometry -----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(s / self.points_per_axis for s in self.side_length)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def volume(self) -> float:
        return float(np.prod(self.side_length))

    def axes(self) -> list[np.ndarray]:
        return [np.arange(self.points_per_axis) * hj for hj in self.h]

    def coordinates(self) -> np.ndarray:
        """Node coordinates, shape ``(dim, *shape)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"))

    @property
    def inner_bounds(self) -> tuple[int, int]:
        """Node indices ``(i0, i1)`` bounding the inner sub-box (both are boundary nodes)."""
        n = self.points_per_axis
        i0 = int(round(n * (1.0 - self.inner_support_fraction) / 2.0))
        return i0, n - i0

    @property
    def inner_center(self) -> np.ndarray:
        i0, i1 = self.inner_bounds
        return np.array([0.5 * (i0 + i1) * hj for hj in self.h])

    def inner_mask(self) -> np.ndarray:
        """Boolean mask of nodes strictly inside the inner sub-box."""
        i0, i1 = self.inner_bounds
        idx = np.arange(self.points_per_axis)
        m1 = (idx > i0) & (idx < i1)
        mask = m1
        for _ in range(self.dim - 1):
            mask = np.multiply.outer(mask, m1)
        return mask

    # spectral -----------------------------------------------------------
    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Angular wavenumbers per axis with the Nyquist entry zeroed, broadcastable."""
        out = []
        n = self.points_per_axis
        for j, hj in enumerate(self.h):
            k = 2.0 * np.pi * np.fft.fftfreq(n, d=hj)
            k[n // 2] = 0.0
            shape = [1] * self.dim
            shape[j] = n
            out.append(k.reshape(shape))
        return tuple(out)

    @cached_property
    def laplacian_symbol(self) -> np.ndarray:
        sym = np.zeros(self.shape)
        for k in self.wavenumbers:
            sym = sym - k**2
        return sym

    def with_points(self, points_per_axis: int) -> "Grid":
        return Grid(self.dim, points_per_axis, self.side_length, self.inner_support_fraction)


def _fftn(a: np.ndarray, axes) -> np.ndarray:
    return sfft.fftn(a, axes=axes, workers=fft_workers())


def _ifftn(a: np.ndarray, axes) -> np.ndarray:
    return sfft.ifftn(a, axes=axes, workers=fft_workers())


def _as_samples(values, shape) -> np.ndarray:
    arr = np.asarray(values)
    if np.iscomplexobj(arr):
        arr = arr.astype(np.complex128)
    else:
        arr = arr.astype(np.float64)
    if arr.shape != shape:
        raise ValueError(f"expected samples of shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("field samples must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


class _FieldBase:
    grid: Grid
    values: np.ndarray
    _ncomp_axes: int = 0

    @cached_property
    def spectrum(self) -> np.ndarray:
        """Discrete Fourier coefficients over the spatial axes."""
        axes = tuple(range(self._ncomp_axes, self._ncomp_axes + self.grid.dim))
        out = _fftn(self.values, axes)
        out.setflags(write=False)
        return out

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def _check(self, other) -> None:
        if other.grid != self.grid:
            raise GridMismatch("fields live on different grids")

    def _new(self, values):
        return type(self)(self.grid, values)

    def __add__(self, other):
        self._check(other)
        return self._new(self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return self._new(self.values - other.values)

    def __mul__(self, lam):
        return self._new(self.values * lam)

    __rmul__ = __mul__

    def __neg__(self):
        return self._new(-self.values)

    @property
    def real(self):
        return self._new(self.values.real)

    @property
    def imag(self):
        return self._new(np.imag(self.values))

    def mean(self) -> np.ndarray | complex:
        axes = tuple(range(self._ncomp_axes, self._ncomp_axes + self.grid.dim))
        return self.values.mean(axis=axes)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


@dataclass(frozen=True, eq=False)
class ScalarField(_FieldBase):
    grid: Grid
    values: np.ndarray
    _ncomp_axes = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _as_samples(self.values, self.grid.shape))

    @classmethod
    def constant(cls, grid: Grid, value: complex) -> "ScalarField":
        return cls(grid, np.full(grid.shape, value))

    def integral(self) -> complex:
        return complex(self.values.sum()) * self.grid.cell_volume

    def inner(self, other: "ScalarField") -> complex:
        """``<u, v> = sum u conj(v) h^n``."""
        self._check(other)
        return complex(np.vdot(other.values, self.values)) * self.grid.cell_volume

    def l2_norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) * self.grid.cell_volume)


@dataclass(frozen=True, eq=False)
class VectorField(_FieldBase):
    grid: Grid
    values: np.ndarray
    _ncomp_axes = 1

    def __post_init__(self) -> None:
        g = self.grid
        object.__setattr__(self, "values", _as_samples(self.values, (g.dim, *g.shape)))

    @classmethod
    def constant(cls, grid: Grid, vec: Sequence[complex]) -> "VectorField":
        vec = np.asarray(vec)
        return cls(grid, vec.reshape(-1, *([1] * grid.dim)) * np.ones((grid.dim, *grid.shape)))

    def component(self, j: int) -> ScalarField:
        return ScalarField(self.grid, self.values[j])

    def dot(self, other: "VectorField") -> ScalarField:
        """Pointwise bilinear product ``sum_j a_j b_j`` (no conjugation)."""
        self._check(other)
        return ScalarField(self.grid, np.sum(self.values * other.values, axis=0))

    def norm_squared(self) -> ScalarField:
        return ScalarField(self.grid, np.sum(np.abs(self.values) ** 2, axis=0))

    def inner(self, other: "VectorField") -> complex:
        self._check(other)
        return complex(np.vdot(other.values, self.values)) * self.grid.cell_volume

    def l2_norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) * self.grid.cell_volume)


@dataclass(frozen=True, eq=False)
class MatrixField(_FieldBase):
    grid: Grid
    values: np.ndarray
    skew: bool = False
    _ncomp_axes = 2

    def __post_init__(self) -> None:
        g = self.grid
        arr = _as_samples(self.values, (g.dim, g.dim, *g.shape))
        if self.skew:
            err = np.max(np.abs(arr + np.swapaxes(arr, 0, 1))) if arr.size else 0.0
            scale = max(1.0, float(np.max(np.abs(arr))))
            if err > 1e-12 * scale:
                raise ValueError(f"skew flag set but F + F^T has size {err:.3e}")
        object.__setattr__(self, "values", arr)

    def _new(self, values):
        return MatrixField(self.grid, values, skew=self.skew)

    def __add__(self, other):
        self._check(other)
        return MatrixField(self.grid, self.values + other.values, skew=self.skew and other.skew)

    def __sub__(self, other):
        self._check(other)
        return MatrixField(self.grid, self.values - other.values, skew=self.skew and other.skew)

    @classmethod
    def constant(cls, grid: Grid, mat, skew: bool = False) -> "MatrixField":
        mat = np.asarray(mat)
        vals = mat.reshape(grid.dim, grid.dim, *([1] * grid.dim)) * np.ones((grid.dim, grid.dim, *grid.shape))
        return cls(grid, vals, skew=skew)

    @classmethod
    def identity(cls, grid: Grid, scale: float = 1.0) -> "MatrixField":
        return cls.constant(grid, scale * np.eye(grid.dim))

    @classmethod
    def zeros(cls, grid: Grid) -> "MatrixField":
        return cls(grid, np.zeros((grid.dim, grid.dim, *grid.shape)))

    @classmethod
    def diagonal(cls, grid: Grid, entries: Sequence[ScalarField]) -> "MatrixField":
        vals = np.zeros((grid.dim, grid.dim, *grid.shape), dtype=np.result_type(*[e.values for e in entries]))
        for j, e in enumerate(entries):
            vals[j, j] = e.values
        return cls(grid, vals)

    def transpose(self) -> "MatrixField":
        return MatrixField(self.grid, np.swapaxes(self.values, 0, 1), skew=self.skew)

    def entry(self, j: int, k: int) -> ScalarField:
        return ScalarField(self.grid, self.values[j, k])

    def apply(self, v: VectorField) -> VectorField:
        """Pointwise ``(F v)_j = sum_k F_jk v_k``."""
        self._check(v)
        return VectorField(self.grid, np.einsum("jk...,k...->j...", self.values, v.values))

    def pointwise_eigvalsh(self) -> np.ndarray:
        """Eigenvalues of the symmetric real part at each node, shape ``(size, dim)``."""
        g = self.grid
        mats = np.moveaxis(self.values.real.reshape(g.dim, g.dim, -1), -1, 0)
        mats = 0.5 * (mats + np.swapaxes(mats, 1, 2))
        return np.linalg.eigvalsh(mats)


# spectral calculus ------------------------------------------------------

def _spatial_axes(grid: Grid, lead: int) -> tuple[int, ...]:
    return tuple(range(lead, lead + grid.dim))


def _real_if(values: np.ndarray, real: bool) -> np.ndarray:
    return values.real if real else values


def grad(f: ScalarField) -> VectorField:
    g = f.grid
    fh = f.spectrum
    comps = [_ifftn(1j * k * fh, _spatial_axes(g, 0)) for k in g.wavenumbers]
    return VectorField(g, _real_if(np.stack(comps), f.is_real))


def div(v: VectorField) -> ScalarField:
    g = v.grid
    vh = v.spectrum
    acc = sum(1j * k * vh[j] for j, k in enumerate(g.wavenumbers))
    return ScalarField(g, _real_if(_ifftn(acc, _spatial_axes(g, 0)), v.is_real))


def curl_matrix(v: VectorField) -> MatrixField:
    """``(Curl v)_jk = d_j v_k - d_k v_j``."""
    g = v.grid
    vh = v.spectrum
    ks = g.wavenumbers
    out = np.zeros((g.dim, g.dim, *g.shape), dtype=np.complex128)
    for j in range(g.dim):
        for k in range(j + 1, g.dim):
            out[j, k] = 1j * ks[j] * vh[k] - 1j * ks[k] * vh[j]
            out[k, j] = -out[j, k]
    vals = _real_if(_ifftn(out, _spatial_axes(g, 2)), v.is_real)
    # enforce exact antisymmetry of the stored samples
    vals = 0.5 * (vals - np.swapaxes(vals, 0, 1))
    return MatrixField(g, vals, skew=True)


def div_matrix_rows(F: MatrixField) -> VectorField:
    """Row divergence ``(Div F)_j = sum_k d_k F_jk``."""
    g = F.grid
    Fh = F.spectrum
    ks = g.wavenumbers
    acc = np.stack([sum(1j * ks[k] * Fh[j, k] for k in range(g.dim)) for j in range(g.dim)])
    return VectorField(g, _real_if(_ifftn(acc, _spatial_axes(g, 1)), F.is_real))


def laplacian(f: ScalarField) -> ScalarField:
    g = f.grid
    out = _ifftn(g.laplacian_symbol * f.spectrum, _spatial_axes(g, 0))
    return ScalarField(g, _real_if(out, f.is_real))


def inv_laplacian(f: ScalarField) -> tuple[ScalarField, complex]:
    """Zero-mean solution of ``laplacian(u) = f - mean(f)``.

    Returns ``(u, mean(f))``. Modes on which the symbol vanishes (the mean and
    the pure Nyquist modes) are not inverted; band-limited data carries no
    Nyquist content, so for such data the round trip is exact.
    """
    g = f.grid
    sym = g.laplacian_symbol
    fh = f.spectrum
    inv = np.zeros_like(sym)
    nz = sym != 0
    inv[nz] = 1.0 / sym[nz]
    u = _ifftn(inv * fh, _spatial_axes(g, 0))
    mean = complex(fh.flat[0]) / g.size
    if f.is_real:
        mean = mean.real
    return ScalarField(g, _real_if(u, f.is_real)), mean


def band_limit_filter(values: np.ndarray, grid: Grid, band: int, lead: int = 0) -> np.ndarray:
    """Zero every Fourier mode with an integer index above ``band`` on some axis."""
    axes = _spatial_axes(grid, lead)
    vh = _fftn(values, axes)
    n = grid.points_per_axis
    idx = np.abs(np.fft.fftfreq(n, d=1.0 / n))
    keep = idx <= band
    mask = keep
    for _ in range(grid.dim - 1):
        mask = np.multiply.outer(mask, keep)
    out = _ifftn(vh * mask, axes)
    return out.real if not np.iscomplexobj(values) else out


def make_test_function(
    grid: Grid,
    seed: int,
    band_limit: int = 3,
    scale: float = 1.0,
    center: Sequence[float] | None = None,
    real: bool = False,
) -> ScalarField:
    """Smooth test function supported in the inner sub-box.

    A random trigonometric polynomial with integer wave numbers up to
    ``band_limit`` is multiplied by a Gaussian envelope that has decayed to
    below 1e-12 at the inner-box faces; samples outside the inner box are set
    to zero. ``scale < 1`` shrinks the envelope (the centre may then move).
    """
    n = grid.points_per_axis
    if not 0 <= band_limit < n // 2:
        raise ValueError(f"band_limit must lie in [0, {n // 2}), got {band_limit}")
    if not 0 < scale <= 1:
        raise ValueError("scale must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    i0, i1 = grid.inner_bounds
    hs = np.array(grid.h)
    half = 0.5 * (i1 - i0) * hs
    radius = scale * float(half.min())
    width = radius / 7.5
    c = grid.inner_center if center is None else np.asarray(center, dtype=float)
    x = grid.coordinates()
    shift = x - c.reshape(-1, *([1] * grid.dim))
    env = np.exp(-0.5 * np.sum(shift**2, axis=0) / width**2)
    modes = np.arange(-band_limit, band_limit + 1)
    kk = np.stack(np.meshgrid(*([modes] * grid.dim), indexing="ij")).reshape(grid.dim, -1)
    coef = rng.standard_normal(kk.shape[1]) + (0.0 if real else 1j) * rng.standard_normal(kk.shape[1])
    lengths = np.array(grid.side_length).reshape(-1, 1)
    phase = np.tensordot((2.0 * np.pi * kk / lengths).T, x, axes=(1, 0))
    mod = np.tensordot(coef, np.exp(1j * phase), axes=(0, 0))
    vals = env * (mod.real if real else mod)
    vals = np.where(grid.inner_mask(), vals, 0.0)
    peak = np.max(np.abs(vals))
    if peak > 0:
        vals = vals / peak
    return ScalarField(grid, vals)
