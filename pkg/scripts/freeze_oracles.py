"""Recompute the independent reference values and write them to tests/data/frozen_oracles.json.

References come from dense eigen/singular value routines on matrices
assembled by explicit loops (tests/oracles.py), from quadrature, and from
the radial finite-element problem. None of them calls the package solvers.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from scipy.integrate import dblquad

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

import oracles  # noqa: E402
from helpers import random_coefficients, random_vector  # noqa: E402

from formlab import Grid  # noqa: E402

CASES = [(1, 16, 0), (2, 16, 1), (2, 16, 2), (3, 8, 3)]


def build() -> dict:
    out: dict = {"dense": [], "radial_hardy": {}, "hardy_cell_3d": None}
    for dim, n, seed in CASES:
        g = Grid(dim, n)
        cs = random_coefficients(g, seed)
        acc = random_coefficients(g, seed, diag=4.0)
        d = random_vector(g, seed).values
        mu = np.abs(np.random.default_rng(seed).standard_normal(g.shape)) * 10
        out["dense"].append({
            "dim": dim, "points": n, "seed": seed,
            "form_bound": oracles.form_bound_oracle(g, cs.A.values, cs.b.values, cs.c.values),
            "form_bound_mass": oracles.form_bound_oracle(g, cs.A.values, cs.b.values, cs.c.values, True),
            "accretivity": oracles.accretivity_oracle(g, acc.A.values, acc.b.values, acc.c.values),
            "commutator": oracles.commutator_oracle(g, d),
            "trace": oracles.trace_norm_oracle(g, mu),
        })
    for T in (10.0, 25.0):
        out["radial_hardy"][str(T)] = oracles.radial_hardy_threshold(T)
    face, _ = dblquad(lambda z, y: 1.0 / (0.25 + y * y + z * z), -0.5, 0.5, -0.5, 0.5, epsabs=1e-13, epsrel=1e-13)
    out["hardy_cell_3d"] = 3 * face
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=ROOT / "tests" / "data" / "frozen_oracles.json")
    args = ap.parse_args()
    args.out.write_text(json.dumps(build(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
