"""Compare m_rho with the boundary distance on a half-space and a box, for both normalizations.

Usage: python scripts/mrho_normalization.py [--rho 1.08]
"""
import argparse

import numpy as np

from frachardy.geometry import Box, HalfSpace, dist_boundary, halfspace_m_rho_ratio, m_rho


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rho", type=float, default=1.08)
    args = ap.parse_args()
    print(f"half-space ratio m / x_d with the printed prefactor: {halfspace_m_rho_ratio(2, args.rho):.6f}")
    H, B = HalfSpace(2), Box([0, 0], [4, 4])
    for dom, pts in ((H, [(0.0, 0.5), (1.0, 2.0)]), (B, [(1.0, 1.0), (2.0, 2.0), (0.5, 3.0)])):
        for x in pts:
            x = np.array(x)
            dist = dist_boundary(x, dom)
            pr = m_rho(x, args.rho, dom)
            cal = m_rho(x, args.rho, dom, normalization="calibrated")
            print(f"{type(dom).__name__:>9} x = {x}: dist = {dist:.6f}  m (printed) = {pr:.6f}  "
                  f"m (calibrated) = {cal:.6f}")


if __name__ == "__main__":
    main()
