"""Named coefficient families sampled on a grid.

Every family is a function ``(grid, kind, **params) -> field`` where kind is
``scalar``, ``vector`` or ``matrix``. Singular profiles are regularized at the
grid scale so refinement sweeps see the singularity sharpen.
"""
from __future__ import annotations

import math
from typing import Any, Callable

import numpy as np

from .fieldio import read_field
from .grid import Grid, MatrixField, ScalarField, VectorField, band_limit_filter, grad

__all__ = ["FAMILIES", "UnknownFamily", "build_field", "resolve", "hardy_cell_average", "radial_distance"]

Field = ScalarField | VectorField | MatrixField

# mean of |x|^-2 over the unit cube centred at the origin:
# 3 * int_{[-1/2,1/2]^2} dy dz / (1/4 + y^2 + z^2), one face per ray direction
HARDY_CELL_3D = 7.674124222443742


class UnknownFamily(KeyError):
    """A family name (or a nested profile) that the registry cannot resolve."""


def _centre(grid: Grid, x0) -> np.ndarray:
    if x0 is None or x0 == "center":
        return grid.inner_center
    if x0 == "left":
        i0, _ = grid.inner_bounds
        return np.array([i0 * hj for hj in grid.h])
    c = np.asarray(x0, dtype=float).reshape(-1)
    if c.size != grid.dim:
        raise ValueError(f"x0 needs {grid.dim} coordinates")
    return c


def radial_distance(grid: Grid, x0=None) -> tuple[np.ndarray, np.ndarray]:
    """Periodic displacement ``x - x0`` (shape ``(dim, *shape)``) and its length."""
    c = _centre(grid, x0)
    x = grid.coordinates()
    sides = np.array(grid.side_length).reshape(-1, *([1] * grid.dim))
    d = x - c.reshape(-1, *([1] * grid.dim))
    d = d - sides * np.round(d / sides)
    return d, np.sqrt(np.sum(d**2, axis=0))


def _window(grid: Grid, r: np.ndarray, start: float = 0.36, stop: float = 0.49) -> np.ndarray:
    """Cosine cutoff equal to 1 for ``r < start * L`` and 0 beyond ``stop * L``."""
    L = min(grid.side_length)
    s = np.clip((r - start * L) / ((stop - start) * L), 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * s))


def hardy_cell_average(grid: Grid) -> float:
    """Value of ``|x|^-2`` assigned to the singular node, in units of ``1/h^2``.

    In three dimensions this is the exact cell mean. In one and two dimensions
    the cell mean diverges and the value at distance ``h/2`` is used.
    """
    return HARDY_CELL_3D if grid.dim == 3 else 4.0


def _scalar_profile(grid: Grid, name: str, params: dict) -> np.ndarray:
    """Real scalar profiles shared by the scalar kind and the derivative families."""
    h = min(grid.h)
    if name == "constant":
        return np.full(grid.shape, float(params.get("value", 0.0)))
    if name == "bump":
        _, r = radial_distance(grid, params.get("x0"))
        r0 = float(params.get("radius", 0.15))
        width = float(params.get("width", 0.09))
        s = np.clip((r - r0) / width, 0.0, 1.0)
        return float(params.get("amplitude", 1.0)) * 0.5 * (1.0 + np.cos(np.pi * s))
    if name == "gaussian":
        _, r = radial_distance(grid, params.get("x0"))
        w = float(params.get("width", 0.06))
        return float(params.get("amplitude", 1.0)) * np.exp(-0.5 * r**2 / w**2)
    if name == "power":
        _, r = radial_distance(grid, params.get("x0"))
        reg = float(params.get("reg", 1.0)) * h
        e = float(params["exponent"])
        return float(params.get("amplitude", 1.0)) * _window(grid, r) * (r**2 + reg**2) ** (0.5 * e)
    if name == "log_bmo":
        _, r = radial_distance(grid, params.get("x0"))
        reg = float(params.get("reg", 1.0)) * h
        return float(params.get("amplitude", 1.0)) * _window(grid, r) * np.log(np.sqrt(r**2 + reg**2))
    if name == "hardy":
        _, r = radial_distance(grid, params.get("x0"))
        gamma = float(params.get("gamma", 0.25))
        out = np.empty(grid.shape)
        sing = r < 0.5 * h
        out[~sing] = 1.0 / r[~sing] ** 2
        out[sing] = hardy_cell_average(grid) / h**2
        return gamma * out
    if name == "random_band_limited":
        rng = np.random.default_rng(int(params.get("seed", 0)))
        band = int(params.get("band", 3))
        raw = rng.standard_normal(grid.shape)
        vals = band_limit_filter(raw, grid, band)
        peak = np.max(np.abs(vals))
        return float(params.get("amplitude", 1.0)) * (vals / peak if peak > 0 else vals)
    if name == "single_mode":
        k = np.asarray(params.get("mode", [1] + [0] * (grid.dim - 1)), dtype=float)
        x = grid.coordinates()
        sides = np.array(grid.side_length)
        phase = sum(2.0 * np.pi * k[j] * x[j] / sides[j] for j in range(grid.dim))
        return float(params.get("amplitude", 1.0)) * np.sin(phase)
    raise UnknownFamily(name)


def _as_kind(grid: Grid, kind: str, vals: np.ndarray, params: dict) -> Field:
    if kind == "scalar":
        return ScalarField(grid, vals)
    if kind == "matrix":
        if params.get("skew", False):
            if grid.dim < 2:
                raise ValueError("skew matrix families need dim >= 2")
            out = np.zeros((grid.dim, grid.dim, *grid.shape))
            out[0, 1], out[1, 0] = vals, -vals
            return MatrixField(grid, out, skew=True)
        out = np.zeros((grid.dim, grid.dim, *grid.shape), dtype=vals.dtype)
        for j in range(grid.dim):
            out[j, j] = vals
        return MatrixField(grid, out)
    if kind == "vector":
        direction = np.asarray(params.get("direction", [1.0] + [0.0] * (grid.dim - 1)), dtype=float)
        if direction.size != grid.dim:
            raise ValueError(f"direction needs {grid.dim} entries")
        return VectorField(grid, direction.reshape(-1, *([1] * grid.dim)) * vals)
    raise ValueError(f"unknown field kind {kind!r}")


def _scalar_family(name: str) -> Callable[..., Field]:
    def build(grid: Grid, kind: str, **params) -> Field:
        return _as_kind(grid, kind, _scalar_profile(grid, name, params), params)

    build.__name__ = name
    return build


def _profile_of(grid: Grid, params: dict) -> np.ndarray:
    prof = params.get("profile")
    if not isinstance(prof, dict) or "family" not in prof:
        raise UnknownFamily("profile")
    prof = dict(prof)
    return _scalar_profile(grid, prof.pop("family"), prof)


def gradient_of(grid: Grid, kind: str = "vector", **params) -> VectorField:
    """``grad(phi)`` for a scalar profile given as a nested family table."""
    if kind != "vector":
        raise ValueError("gradient_of produces vector fields")
    g = grad(ScalarField(grid, _profile_of(grid, params)))
    return VectorField(grid, np.real(g.values) * float(params.get("scale", 1.0)))


def perp_gradient_of(grid: Grid, kind: str = "vector", **params) -> VectorField:
    """``(-d2 phi, d1 phi, 0, ...)``, divergence free, rotating in the first coordinate plane."""
    if kind != "vector":
        raise ValueError("perp_gradient_of produces vector fields")
    if grid.dim < 2:
        raise ValueError("perp_gradient_of needs dim >= 2")
    g = np.real(grad(ScalarField(grid, _profile_of(grid, params))).values)
    out = np.zeros_like(g)
    out[0], out[1] = -g[1], g[0]
    return VectorField(grid, out * float(params.get("scale", 1.0)))


def hardy(grid: Grid, kind: str = "scalar", **params) -> Field:
    """``gamma |x - x0|^-2``; the vector kind is ``sqrt(gamma) (x - x0)/|x - x0|^2`` (same squared length)."""
    if kind == "vector":
        d, r = radial_distance(grid, params.get("x0"))
        gamma = float(params.get("gamma", 0.25))
        r2 = np.where(r < 0.5 * min(grid.h), np.inf, r**2)
        return VectorField(grid, math.sqrt(gamma) * d / r2)
    return _as_kind(grid, kind, _scalar_profile(grid, "hardy", params), params)


def from_file(grid: Grid, kind: str = "scalar", **params) -> Field:
    f = read_field(params["path"])
    if f.grid != grid:
        raise ValueError(f"field file {params['path']} lives on a different grid")
    want = {"scalar": ScalarField, "vector": VectorField, "matrix": MatrixField}[kind]
    if not isinstance(f, want):
        raise ValueError(f"field file {params['path']} does not hold a {kind} field")
    return f


FAMILIES: dict[str, Callable[..., Field]] = {
    "constant": _scalar_family("constant"),
    "bump": _scalar_family("bump"),
    "gaussian": _scalar_family("gaussian"),
    "power": _scalar_family("power"),
    "log_bmo": _scalar_family("log_bmo"),
    "random_band_limited": _scalar_family("random_band_limited"),
    "single_mode": _scalar_family("single_mode"),
    "gradient_of": gradient_of,
    "perp_gradient_of": perp_gradient_of,
    "hardy": hardy,
    "file": from_file,
}


def resolve(spec: dict[str, Any]) -> None:
    """Raise UnknownFamily if the table (or a nested profile) names no registered family."""
    name = spec.get("family")
    if name not in FAMILIES:
        raise UnknownFamily(str(name))
    if name in ("gradient_of", "perp_gradient_of"):
        prof = spec.get("profile")
        if not isinstance(prof, dict) or prof.get("family") not in FAMILIES or prof.get("family") in (
            "gradient_of", "perp_gradient_of", "file",
        ):
            raise UnknownFamily(f"{name}.profile")


def build_field(grid: Grid, spec: dict[str, Any], kind: str) -> Field:
    """Sample the family described by ``{"family": name, **params}``."""
    resolve(spec)
    params = {k: v for k, v in spec.items() if k != "family"}
    return FAMILIES[spec["family"]](grid, kind, **params)
