"""Evaluate the weighted Hardy inequality with remainder for a few bumps and print the terms.

Usage: python scripts/verify_bumps.py [--d 1] [--regime halfspace] [--s 0.8] [--p 1.5]
"""
import argparse

from frachardy.functionals import bump, verify_hardy
from frachardy.model import FractionalParams

SUPPORTS = {
    1: {"halfspace": ["slab:0.5,1.5", "slab:0.1,3.0"], "fullspace": ["slab:0.5,1.5", "slab:-2,-0.5"]},
    2: {"halfspace": ["ball:0,1.5,0.5"], "fullspace": ["annulus:0.5,1.5"]},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=1, choices=(1, 2))
    ap.add_argument("--regime", default="halfspace", choices=("halfspace", "fullspace"))
    ap.add_argument("--s", type=float, default=0.8)
    ap.add_argument("--p", type=float, default=1.5)
    ap.add_argument("--alpha", type=float, default=0.0)
    ap.add_argument("--beta", type=float, default=0.0)
    args = ap.parse_args()
    P = FractionalParams(args.d, args.s, args.p, args.alpha, args.beta)
    for sup in SUPPORTS[args.d][args.regime]:
        for profile in (("even", "odd") if args.d == 1 else ("even",)):
            r = verify_hardy(bump(sup, profile=profile), P, args.regime)
            e, h, rem = (r.terms[k].value for k in ("energy", "hardy", "remainder"))
            print(f"{sup:>22} {profile:>4}: E = {e:.6g}  hardy = {h:.6g}  remainder = {rem:.6g}  "
                  f"slack = {r.slack:.3e} (tol {r.tol_total:.1e})  {r.status}")


if __name__ == "__main__":
    main()
