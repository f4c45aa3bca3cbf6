"""Package results against reference values frozen by scripts/freeze_oracles.py."""
import json
from pathlib import Path

import numpy as np
import pytest

from formlab import Grid, ScalarField, VectorField, accretivity_min, commutator_constant, form_bound_constant, trace_norm
from formlab.families import HARDY_CELL_3D

import oracles
from helpers import random_coefficients, random_vector

FROZEN = json.loads((Path(__file__).parent / "data" / "frozen_oracles.json").read_text())


@pytest.mark.parametrize("case", FROZEN["dense"], ids=lambda c: f"{c['dim']}d-seed{c['seed']}")
def test_dense_references(case):
    g = Grid(case["dim"], case["points"])
    seed = case["seed"]
    cs = random_coefficients(g, seed)
    assert form_bound_constant(cs, seed=seed).constant == pytest.approx(case["form_bound"], rel=1e-6)
    assert form_bound_constant(cs, True, seed=seed).constant == pytest.approx(case["form_bound_mass"], rel=1e-6)
    acc = random_coefficients(g, seed, diag=4.0)
    assert accretivity_min(acc, bounds=False, seed=seed).min_rayleigh == pytest.approx(case["accretivity"], rel=1e-6)
    d = random_vector(g, seed).values
    assert commutator_constant(VectorField(g, d), seed=seed).constant == pytest.approx(case["commutator"], rel=1e-6)
    mu = np.abs(np.random.default_rng(seed).standard_normal(g.shape)) * 10
    assert trace_norm(ScalarField(g, mu), seed=seed).value == pytest.approx(case["trace"], rel=1e-6)


def test_radial_reference_is_reproducible():
    for T, val in FROZEN["radial_hardy"].items():
        assert oracles.radial_hardy_threshold(float(T)) == pytest.approx(val, rel=1e-12)
        assert val == pytest.approx(0.25 + np.pi**2 / float(T) ** 2, rel=1e-3)


def test_hardy_cell_constant():
    assert HARDY_CELL_3D == pytest.approx(FROZEN["hardy_cell_3d"], rel=1e-12)
