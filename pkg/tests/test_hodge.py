import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from formlab import Grid, MatrixField, ScalarField, VectorField, curl_matrix, div, div_matrix_rows, grad, laplacian
from formlab.hodge import decompose_with_skew, hodge_decompose, potential_field, two_d_obstruction

import oracles
from helpers import random_scalar, random_vector

seeds = st.integers(0, 2**31 - 1)
dims = st.sampled_from([2, 3])


def rel_err(a: VectorField, b: VectorField) -> float:
    return np.max(np.abs(a.values - b.values)) / max(np.max(np.abs(b.values)), 1e-300)


def random_skew(grid, seed):
    return curl_matrix(random_vector(grid, seed, cplx=True))


def test_constant_field():
    g = Grid(2, 16)
    parts = hodge_decompose(VectorField.constant(g, [1.5, -2.0]))
    np.testing.assert_allclose(parts.mean, [1.5, -2.0])
    assert parts.f.max_abs() < 1e-14 and parts.F.max_abs() < 1e-14


def test_gradient_field():
    g = Grid(3, 16)
    b = grad(random_scalar(g, 1))
    parts = hodge_decompose(b)
    assert parts.F.max_abs() < 1e-12
    assert rel_err(parts.c_irr, b) < 1e-12


def test_perp_gradient_field_has_no_irrotational_part():
    g = Grid(2, 32)
    gg = grad(random_scalar(g, 2)).values
    b = VectorField(g, np.stack([-gg[1], gg[0]]))
    parts = hodge_decompose(b)
    assert parts.c_irr.max_abs() < 1e-12 * b.max_abs()
    assert rel_err(parts.reconstruct(), b) < 1e-12
    # spectral projection oracle: Leray projector applied mode by mode
    k1 = 2 * np.pi * np.fft.fftfreq(32, d=1 / 32)
    k = np.stack(np.meshgrid(k1, k1, indexing="ij"))
    bh = np.fft.fftn(b.values, axes=(1, 2))
    k2 = np.sum(k**2, axis=0)
    k2[0, 0] = 1.0
    proj = bh - k * np.sum(k * bh, axis=0) / k2
    np.testing.assert_allclose(np.fft.ifftn(proj, axes=(1, 2)).real, parts.div_free.values, atol=1e-12)


@given(seeds, dims)
def test_reconstruction_and_structure(seed, dim):
    g = Grid(dim, 16)
    b = random_vector(g, seed, band=4, cplx=True)
    parts = hodge_decompose(b)
    assert rel_err(parts.reconstruct(), b) < 1e-10
    F = parts.F.values
    assert np.array_equal(F, -np.swapaxes(F, 0, 1))
    assert div(parts.div_free).max_abs() < 1e-10 * b.max_abs()
    assert abs(parts.f.mean()) < 1e-12 * b.max_abs()
    assert np.max(np.abs(F.mean(axis=tuple(range(2, 2 + dim))))) < 1e-12 * max(1.0, np.max(np.abs(F)))


@given(seeds, dims)
def test_orthogonality(seed, dim):
    g = Grid(dim, 16)
    parts = hodge_decompose(random_vector(g, seed, cplx=True))
    ip = parts.c_irr.inner(parts.div_free)
    assert abs(ip) <= 1e-10 * max(1e-300, parts.c_irr.l2_norm() * parts.div_free.l2_norm())


@given(seeds, dims)
def test_idempotence(seed, dim):
    g = Grid(dim, 16)
    parts = hodge_decompose(random_vector(g, seed))
    again = hodge_decompose(parts.c_irr)
    assert again.F.max_abs() < 1e-12 * max(1.0, parts.F.max_abs())
    np.testing.assert_allclose(again.f.values, parts.f.values, atol=1e-12)
    df = hodge_decompose(parts.div_free)
    assert df.c_irr.max_abs() < 1e-12 * max(1.0, parts.div_free.max_abs())
    assert rel_err(df.div_free, parts.div_free) < 1e-10


@given(seeds, dims, st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, dim, alpha, beta):
    g = Grid(dim, 8)
    b1, b2 = random_vector(g, seed), random_vector(g, seed + 1)
    p1, p2 = hodge_decompose(b1), hodge_decompose(b2)
    p = hodge_decompose(b1 * alpha + b2 * beta)
    np.testing.assert_allclose(p.F.values, alpha * p1.F.values + beta * p2.F.values, atol=1e-12)
    np.testing.assert_allclose(p.f.values, alpha * p1.f.values + beta * p2.f.values, atol=1e-12)
    np.testing.assert_allclose(p.mean, alpha * p1.mean + beta * p2.mean, atol=1e-12)


def test_skew_variant_with_zero_matches_plain():
    g = Grid(3, 16)
    b = random_vector(g, 4)
    a, p = decompose_with_skew(b, MatrixField.zeros(g)), hodge_decompose(b)
    np.testing.assert_allclose(a.F.values, p.F.values, atol=1e-14)
    np.testing.assert_allclose(a.c_irr.values, p.c_irr.values, atol=1e-14)


def test_skew_variant_absorbs_div_of_skew():
    g = Grid(2, 32)
    Ac = random_skew(g, 5)
    b = div_matrix_rows(Ac)
    parts = decompose_with_skew(b, Ac)
    assert parts.c_irr.max_abs() < 1e-12 * b.max_abs()
    assert rel_err(parts.reconstruct(), b) < 1e-10
    centred = Ac.values - Ac.values.mean(axis=(2, 3), keepdims=True)
    np.testing.assert_allclose(parts.F.values, centred, atol=1e-12)


@given(seeds, dims)
def test_skew_variant_reconstruction(seed, dim):
    g = Grid(dim, 16)
    b, Ac = random_vector(g, seed, cplx=True), random_skew(g, seed + 3)
    parts = decompose_with_skew(b, Ac)
    assert rel_err(parts.reconstruct(), b) < 1e-10
    np.testing.assert_allclose(parts.c_irr.values, hodge_decompose(b - div_matrix_rows(Ac)).c_irr.values, atol=1e-12)


def test_skew_variant_rejects_non_skew():
    g = Grid(2, 8)
    with pytest.raises(ValueError):
        decompose_with_skew(random_vector(g, 0), MatrixField.identity(g))


def test_potential_field():
    g = Grid(2, 16)
    h, mean = potential_field(ScalarField.constant(g, 2.0))
    assert h.max_abs() < 1e-14 and np.isclose(mean, 2.0)
    u = random_scalar(g, 3)
    h, _ = potential_field(laplacian(u))
    np.testing.assert_allclose(h.values, grad(u).values, atol=1e-11)


@given(seeds, st.sampled_from([1, 2, 3]))
def test_potential_round_trip(seed, dim):
    g = Grid(dim, 16)
    q = random_scalar(g, seed, band=5, cplx=True)
    h, mean = potential_field(q)
    np.testing.assert_allclose(div(h).values, q.values - mean, atol=1e-10 * max(1.0, q.max_abs()))


def test_obstruction_examples():
    g = Grid(2, 32)
    gg = grad(random_scalar(g, 1)).values
    perp = VectorField(g, np.stack([-gg[1], gg[0]]))
    zero = ScalarField(g, np.zeros(g.shape))
    assert two_d_obstruction(perp, zero).passed
    assert not two_d_obstruction(perp, ScalarField.constant(g, 1.0)).passed
    with pytest.raises(ValueError):
        two_d_obstruction(VectorField(Grid(3, 8), np.zeros((3, 8, 8, 8))), ScalarField(Grid(3, 8), np.zeros((8, 8, 8))))


@given(seeds)
def test_obstruction_consistent_with_fd_divergence(seed):
    g = Grid(2, 64)
    b = random_vector(g, seed)
    zero = ScalarField(g, np.zeros(g.shape))
    rep = two_d_obstruction(b, zero)
    fd = sum(oracles.fd_gradient(b.values[j], g)[j] for j in range(2))
    fd_norm = np.sqrt(np.sum(fd**2) * g.cell_volume)
    # band-limited input: the centred-difference divergence agrees to O(h^2)
    assert abs(fd_norm - rep.div_b_l2) <= 0.02 * rep.div_b_l2 + 1e-12
    assert rep.passed == (fd_norm <= 1e-8 * max(1.0, b.l2_norm()))


def test_low_mode_warning():
    g = Grid(2, 32)
    x = g.coordinates()
    slow = VectorField(g, np.stack([np.sin(2 * np.pi * x[1]), np.zeros(g.shape)]))
    assert hodge_decompose(slow).low_mode_warning
    fast = VectorField(g, np.stack([np.sin(12 * np.pi * x[1]), np.zeros(g.shape)]))
    assert not hodge_decompose(fast).low_mode_warning
