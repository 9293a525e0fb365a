"""Write CSV and SVG sweeps for every (rho, theta) combination.

    python3 scripts/sweep_all.py --out results/sweeps
"""

import argparse
from pathlib import Path

from mmd2 import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/sweeps")
    ap.add_argument("--rho", type=float, nargs="+", default=[0.1, 0.5, 0.9])
    ap.add_argument("--theta", type=float, nargs="+", default=[1.0, 1.5, 2.0, 3.0, 15.0])
    ap.add_argument("--grid-n", type=int, default=151)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for theta in args.theta:
        for rho in args.rho:
            cfg = bench.SweepConfig(rho, theta=theta, grid=bench.default_grid(15.0, args.grid_n))
            rows = bench.sweep(cfg)
            stem = out / f"sweep_rho{rho:g}_theta{theta:g}"
            bench.emit(rows, stem.with_suffix(".csv"))
            bench.emit(rows, stem.with_suffix(".svg"), title=f"rho={rho:g}, theta={theta:g}")
            below = [r.mu12 for r in rows if r.mu12 > 0 and r.EQ_dependent < r.EQ_independent_ref]
            drops = bench.monotonicity_violations(rows)
            note = f"below independent for mu12 in [{min(below):g}, {max(below):g}]" if below else ""
            if drops:
                note += f"{'; ' if note else ''}{len(drops)} decreasing steps"
            print(f"theta={theta:<4g} rho={rho:<4g} max ratio={max(r.ratio_to_independent for r in rows):.4f} {note}")


if __name__ == "__main__":
    main()
