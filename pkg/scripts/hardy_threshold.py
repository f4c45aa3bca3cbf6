"""Discrete Hardy threshold in three dimensions across refinements, with the radial reference.

For sigma = gamma |x - x0|^-2 the minimum of the Schroedinger form is affine
in gamma, so one eigen-solve at gamma = 1 gives the whole verdict line.
"""
from __future__ import annotations

import argparse

import numpy as np
import scipy.linalg as sla

from formlab import Grid, MatrixField, schrodinger_positivity
from formlab.families import build_field


def grid_threshold(n: int) -> float:
    g = Grid(3, n)
    rep = schrodinger_positivity(MatrixField.identity(g), build_field(g, {"family": "hardy", "gamma": 1.0}, "scalar"))
    return 1.0 / (1.0 - rep.min_rayleigh)


def radial_threshold(T: float, cells: int = 4000) -> float:
    """Least lambda with int u'^2 r^2 dr = lambda int u^2 dr on (e^-T, 1); tends to 1/4 + pi^2/T^2."""
    r = np.exp(np.linspace(-T, 0.0, cells + 1))
    he = np.diff(r)
    k = (r[1:] ** 3 - r[:-1] ** 3) / 3.0 / he**2
    main = k[:-1] + k[1:]
    mm = (he[:-1] + he[1:]) / 3.0
    A = np.diag(main) - np.diag(k[1:-1], 1) - np.diag(k[1:-1], -1)
    M = np.diag(mm) + np.diag(he[1:-1] / 6.0, 1) + np.diag(he[1:-1] / 6.0, -1)
    return float(sla.eigh(A, M, eigvals_only=True, subset_by_index=[0, 0])[0])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", default="16,32,64")
    ap.add_argument("--widths", default="10,25,50")
    args = ap.parse_args()
    print("grid thresholds (gamma at which the form minimum reaches 0)")
    for n in (int(x) for x in args.levels.split(",")):
        print(f"  {n:4d}^3  {grid_threshold(n):.4f}")
    print("radial reference, log-width T (exact 1/4 + pi^2/T^2)")
    for T in (float(x) for x in args.widths.split(",")):
        print(f"  T={T:5.1f}  {radial_threshold(T):.4f}  {0.25 + np.pi**2 / T**2:.4f}")


if __name__ == "__main__":
    main()
