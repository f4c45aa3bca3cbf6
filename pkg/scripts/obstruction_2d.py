"""Form bound of a compactly supported q in 2D as the box grows at fixed mesh width.

A nonzero-mean q is not form bounded in the plane, so its constant keeps
growing; a divergence-free drift with no potential term stays put.
"""
from __future__ import annotations

import argparse

import numpy as np

from formlab import CoefficientSet, Grid, ScalarField, VectorField, form_bound_constant, grad, two_d_obstruction
from formlab.families import radial_distance


def bump(r: np.ndarray, r0: float = 0.15, r1: float = 0.24) -> np.ndarray:
    s = np.clip((r - r0) / (r1 - r0), 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * s))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--base", type=int, default=64, help="points per axis at side length 1")
    ap.add_argument("--steps", type=int, default=3)
    args = ap.parse_args()
    print(f"{'L':>4} {'N':>5} {'C(q bump)':>12} {'C(perp grad)':>13} {'q obstructed':>13}")
    for k in range(args.steps):
        L, n = 2.0**k, args.base * 2**k
        g = Grid(2, n, side_length=L)
        _, r = radial_distance(g)
        q = ScalarField(g, bump(r))
        gl = grad(ScalarField(g, np.exp(-0.5 * r**2 / 0.06**2))).values
        b = VectorField(g, np.stack([-gl[1], gl[0]]))
        cq = form_bound_constant(CoefficientSet.build(g, c=q)).constant
        cb = form_bound_constant(CoefficientSet.build(g, b=b)).constant
        obs = two_d_obstruction(VectorField(g, np.zeros((2, *g.shape))), q)
        print(f"{L:4.0f} {n:5d} {cq:12.5f} {cb:13.4f} {str(not obs.passed):>13}")


if __name__ == "__main__":
    main()
