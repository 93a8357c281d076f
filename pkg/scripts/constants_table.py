"""Tabulate the sharp Hardy constants and the remainder constants over a (d, s, p) grid.

Usage: python scripts/constants_table.py [--d 1,2] [--s 0.3,0.5,0.8] [--p 1.2,1.5,1.8]
"""
import argparse

from frachardy.constants import constant_A, constant_C, constant_Cp, constant_D, constant_cp
from frachardy.model import FractionalParams, RegimeError


def floats(text):
    return [float(v) for v in text.split(",")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", default="1,2")
    ap.add_argument("--s", default="0.3,0.5,0.8")
    ap.add_argument("--p", default="1.2,1.5,1.8")
    args = ap.parse_args()
    print(f"{'d':>2} {'s':>5} {'p':>5} {'C (full)':>14} {'D (half)':>14} {'c_p':>10} {'C_p':>10} {'A':>6}")
    for d in (int(v) for v in args.d.split(",")):
        for s in floats(args.s):
            for p in floats(args.p):
                try:
                    P = FractionalParams(d, s, p)
                    C = constant_C(P).value
                    D = constant_D(P).value
                except (RegimeError, ValueError) as exc:
                    print(f"{d:>2} {s:>5} {p:>5}  skipped: {exc}")
                    continue
                print(f"{d:>2} {s:>5} {p:>5} {C:14.8g} {D:14.8g} {constant_cp(p):10.6f} "
                      f"{constant_Cp(p):10.6f} {constant_A(p, 0.0, 0.0):6.3f}")


if __name__ == "__main__":
    main()
