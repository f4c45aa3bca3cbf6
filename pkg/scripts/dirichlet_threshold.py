"""Accretivity boundary of u'' + s u on an interval of length pi, by verdict bisection.

The exact discrete boundary is the first Dirichlet eigenvalue (4/h^2) sin^2(h/2).
"""
from __future__ import annotations

import argparse
import math

from formlab import CoefficientSet, Grid, MatrixField, ScalarField, accretivity_min


def threshold(n: int, tol: float = 1e-9) -> float:
    g = Grid(1, n, side_length=2 * math.pi, inner_support_fraction=0.5)

    def accretive(s: float) -> bool:
        cs = CoefficientSet.build(g, A=MatrixField.identity(g), c=ScalarField.constant(g, s))
        return accretivity_min(cs, bounds=False).verdict == "accretive"

    lo, hi = 0.0, 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if accretive(mid) else (lo, mid)
    return 0.5 * (lo + hi)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", default="64,128,256,512")
    args = ap.parse_args()
    print(f"{'N':>6} {'h':>10} {'s*':>14} {'|s*-1|/h^2':>12} {'exact':>14}")
    for n in (int(x) for x in args.levels.split(",")):
        h = 2 * math.pi / n
        s = threshold(n)
        print(f"{n:6d} {h:10.4g} {s:14.10f} {abs(s - 1) / h**2:12.6f} {(4 / h**2) * math.sin(h / 2) ** 2:14.10f}")


if __name__ == "__main__":
    main()
