import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from formlab import Grid
from formlab.families import FAMILIES, HARDY_CELL_3D, UnknownFamily, build_field, radial_distance, resolve
from formlab.grid import div


def test_hardy_cell_mean_against_quadrature():
    face, _ = dblquad(lambda z, y: 1.0 / (0.25 + y * y + z * z), -0.5, 0.5, -0.5, 0.5, epsabs=1e-13, epsrel=1e-13)
    assert HARDY_CELL_3D == pytest.approx(3 * face, rel=1e-12)


def test_hardy_cell_mean_by_monte_carlo_sampling():
    rng = np.random.default_rng(0)
    x = rng.uniform(-0.5, 0.5, size=(3, 2_000_000))
    est = np.mean(1.0 / np.sum(x**2, axis=0))
    assert est == pytest.approx(HARDY_CELL_3D, rel=0.02)


def test_registry_names():
    assert {"constant", "gradient_of", "perp_gradient_of", "log_bmo", "hardy", "random_band_limited", "file"} <= set(FAMILIES)


@pytest.mark.parametrize("spec", [{"family": "nope"}, {"family": "gradient_of"},
                                  {"family": "gradient_of", "profile": {"family": "gradient_of"}},
                                  {"family": "perp_gradient_of", "profile": {"family": "missing"}}])
def test_unknown_family(spec):
    with pytest.raises(UnknownFamily):
        resolve(spec)


def test_perp_gradient_is_divergence_free():
    g = Grid(2, 64)
    v = build_field(g, {"family": "perp_gradient_of", "profile": {"family": "gaussian", "width": 0.1}}, "vector")
    assert np.max(np.abs(div(v).values)) < 1e-10 * np.max(np.abs(v.values))


def test_random_band_limited_is_seeded():
    g = Grid(2, 16)
    a = build_field(g, {"family": "random_band_limited", "seed": 4}, "scalar").values
    b = build_field(g, {"family": "random_band_limited", "seed": 4}, "scalar").values
    c = build_field(g, {"family": "random_band_limited", "seed": 5}, "scalar").values
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert np.max(np.abs(a)) == pytest.approx(1.0)


def test_hardy_values():
    g = Grid(3, 16)
    f = build_field(g, {"family": "hardy", "gamma": 0.2}, "scalar").values
    _, r = radial_distance(g)
    h = g.h[0]
    off = r > 0.5 * h
    np.testing.assert_allclose(f[off], 0.2 / r[off] ** 2)
    assert f[~off] == pytest.approx(0.2 * HARDY_CELL_3D / h**2)
    v = build_field(g, {"family": "hardy", "gamma": 0.2}, "vector").values
    np.testing.assert_allclose(np.sum(v**2, axis=0)[off], f[off])


def test_radial_distance_is_periodic():
    g = Grid(1, 32)
    _, r = radial_distance(g, [0.0])
    assert r.max() <= 0.5 + 1e-12
    assert r[1] == pytest.approx(r[-1])


def test_skew_matrix_kind_needs_two_dimensions():
    with pytest.raises(ValueError):
        build_field(Grid(1, 16), {"family": "constant", "value": 1.0, "skew": True}, "matrix")


def test_file_family(tmp_path):
    from formlab.fieldio import write_field

    g = Grid(2, 16)
    f = build_field(g, {"family": "gaussian"}, "scalar")
    p = write_field(tmp_path / "q.fld", f)
    back = build_field(g, {"family": "file", "path": str(p)}, "scalar")
    assert np.array_equal(back.values, f.values)
    with pytest.raises(ValueError):
        build_field(g, {"family": "file", "path": str(p)}, "vector")
    with pytest.raises(ValueError):
        build_field(Grid(2, 32), {"family": "file", "path": str(p)}, "scalar")


def test_single_mode_is_exact_sine():
    g = Grid(2, 16)
    f = build_field(g, {"family": "single_mode", "mode": [0, 2]}, "scalar").values
    x = g.coordinates()
    np.testing.assert_allclose(f, np.sin(4 * math.pi * x[1]), atol=1e-14)
