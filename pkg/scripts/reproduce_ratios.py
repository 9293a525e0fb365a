"""Largest dependent/independent mean-queue ratio for the homogeneous sweeps.

    python3 scripts/reproduce_ratios.py [--grid-n 151] [--drift-left 15]
"""

import argparse

from mmd2 import analytic, bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid-n", type=int, default=151)
    ap.add_argument("--drift-left", type=float, default=15.0)
    ap.add_argument("--rho", type=float, nargs="+", default=[0.1, 0.5, 0.9])
    args = ap.parse_args()

    print(f"{'rho':>5} {'lambda':>7} {'max ratio':>10} {'at mu12':>8} {'E[Q] indep':>11} {'E[Q] bulk':>10}")
    for rho in args.rho:
        s = bench.ratio_summary(rho, args.drift_left, args.grid_n)
        eq0 = analytic.mm2_hom_moments(rho).EQ
        eqb = analytic.moments(analytic.solve_bulk(rho * args.drift_left, args.drift_left / 2)).EQ
        print(f"{rho:5.2f} {rho * args.drift_left:7.3f} {s.max_ratio:10.6f} {s.argmax_mu12:8.4g} {eq0:11.6g} {eqb:10.6g}")


if __name__ == "__main__":
    main()
