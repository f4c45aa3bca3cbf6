"""Commutator constants of a bounded and an unbounded drift family in 2D across refinements."""
from __future__ import annotations

import argparse

from formlab import Grid, commutator_constant, criterion_crosscheck
from formlab.families import build_field

FAMILIES = {
    "perp_grad_log": {"family": "perp_gradient_of", "profile": {"family": "log_bmo"}},
    "grad_power_-0.9": {"family": "gradient_of", "profile": {"family": "power", "exponent": -0.9}},
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", default="64,128,256,512")
    ap.add_argument("--crosscheck", action="store_true", help="also print the BMO/trace cross-check ratio")
    args = ap.parse_args()
    levels = [int(x) for x in args.levels.split(",")]
    for name, spec in FAMILIES.items():
        prev = None
        print(name)
        for n in levels:
            d = build_field(Grid(2, n), spec, "vector")
            c = commutator_constant(d).constant
            step = "" if prev is None else f"  ({c / prev - 1:+.1%})"
            line = f"  N={n:5d}  C={c:.5f}{step}"
            if args.crosscheck:
                line += f"  ratio={criterion_crosscheck(d).ratio:.3f}"
            print(line)
            prev = c


if __name__ == "__main__":
    main()
