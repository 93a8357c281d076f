"""Scan the scalar slack inequality over (a, t, p) and report the worst point per p.

Also prints the empirical largest constant on the grid next to C_p and p - 1.
Usage: python scripts/scan_slack.py [--fine] [--workers N]
"""
import argparse

from frachardy.constants import constant_Cp
from frachardy.pointwise import ScanGrid, Variant, empirical_constant, optimality_probe, scan_prop


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fine", action="store_true", help="use a 4x denser linear grid")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    grid = ScanGrid(a_count=8001, t_count=801) if args.fine else ScanGrid()
    for variant in Variant:
        rep = scan_prop(grid, variant, workers=args.workers)
        print(f"{variant.value}: {rep.samples} samples, worst scaled slack {rep.worst_slack:.3e} "
              f"at (a, t, p) = {rep.worst_point}, violations {rep.violations}")
    print("\nscaled slack with c = 1.05 (p - 1) at a = 1e6, t = 1e-6:")
    for p, v in optimality_probe().items():
        print(f"  p = {p}: {v:.3e}")
    print(f"\n{'p':>5} {'C_p':>10} {'p-1':>8} {'grid min f':>12}")
    for p in grid.p_list:
        print(f"{p:5.2f} {constant_Cp(p):10.6f} {p - 1:8.4f} {empirical_constant(p):12.6f}")


if __name__ == "__main__":
    main()
