#!/usr/bin/env python3
"""Tabulate the generalisation bound and its components over a grid of c."""
import argparse

from robust_mem.mmd import BoundInputs, bound_constants, bound_terms, generalisation_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=800)
    ap.add_argument("--c", type=float, nargs="+", default=[0, 1, 10, 100, 1e3, 1e6])
    ap.add_argument("--Lambda", type=float, default=1.0)
    ap.add_argument("--l", type=float, default=1.0)
    ap.add_argument("--sigma1", type=float, default=1.0, help="prior noise sd")
    ap.add_argument("--sigma2", type=float, default=1.0, help="true noise sd")
    ap.add_argument("--d", type=int, default=1)
    a = ap.parse_args()

    C1, C2 = bound_constants(BoundInputs(a.n, 0.0, a.Lambda, a.l, a.sigma1, a.sigma2, a.d))
    print(f"C1={C1:.6g} C2={C2:.6g}")
    names = None
    for c in a.c:
        bi = BoundInputs(a.n, c, a.Lambda, a.l, a.sigma1, a.sigma2, a.d)
        terms = bound_terms(bi)
        if names is None:
            names = list(terms)
            print(f"{'c':>10} " + " ".join(f"{k:>20}" for k in names) + f" {'bound':>10}")
        print(f"{c:>10g} " + " ".join(f"{terms[k]:>20.6g}" for k in names) + f" {generalisation_bound(bi):>10.6g}")


if __name__ == "__main__":
    main()
