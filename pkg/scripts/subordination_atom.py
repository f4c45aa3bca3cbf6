"""Infinitesimal form bound profile C(eps) for a 1D point mass and a constant potential."""
from __future__ import annotations

import argparse

import numpy as np

from formlab import Grid, ScalarField, subordination_profile


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=1024)
    args = ap.parse_args()
    g = Grid(1, args.points, side_length=2.0)
    eps = list(np.logspace(-3, -1, 9))
    atom = subordination_profile(ScalarField.constant(g, 0.0), "trudinger", eps, atoms=[(1.0, 1.0)])
    flat = subordination_profile(ScalarField.constant(g, 1.0), "trudinger", eps)
    print(f"{'eps':>10} {'C atom':>12} {'C const':>10}")
    for e, a, c in zip(eps, atom.constants, flat.constants):
        print(f"{e:10.3e} {a:12.5f} {c:10.5f}")
    print(f"fitted beta: atom {atom.fitted_beta:.4f}, constant {flat.fitted_beta:.2e}")


if __name__ == "__main__":
    main()
