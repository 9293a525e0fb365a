"""Closed form vs truncated chain (and optionally simulation) on random stable models.

    python3 scripts/validate_random.py --n 200 --seed 1 [--simulate 10]
"""

import argparse
import time

import numpy as np

from mmd2 import analytic, chain, sim


def draw(rng, max_rho):
    while True:
        mu1, mu2, mu12 = np.exp(rng.uniform(np.log(0.1), np.log(10.0), 3))
        lam = float(np.exp(rng.uniform(np.log(0.1), np.log(40.0))))
        p = float(np.exp(rng.uniform(np.log(0.01), 0.0)))
        m = chain.ModelParams.of(lam, float(mu1), float(mu2), float(mu12), p=p)
        if analytic.stability(m).rho < max_rho:
            return m


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--max-rho", type=float, default=0.95)
    ap.add_argument("--simulate", type=int, default=0, help="also simulate the first K models")
    ap.add_argument("--horizon", type=float, default=1e5)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    t0 = time.perf_counter()
    worst_pi = worst_res = 0.0
    covered = tried = 0
    for i in range(args.n):
        m = draw(rng, args.max_rho)
        sol = analytic.solve_het(m)
        N = chain.default_levels(sol.r)
        num = chain.solve_truncated(chain.build_het(m, N))
        worst_pi = max(worst_pi, float(np.max(np.abs(num.pi - sol.vector(N)))))
        worst_res = max(worst_res, float(np.max(np.abs(analytic.balance_residual(m, sol, N)))))
        if i < args.simulate:
            est = sim.replicate(sim.SimConfig(m, args.horizon, replications=20, seed=args.seed * 1000 + i))
            checks = [
                est.interval("0").covers(sol.pi0),
                est.interval("(1,0)").covers(sol.pi_10),
                est.interval("(0,1)").covers(sol.pi_01),
                est.EQ_hat.covers(analytic.moments(sol).EQ),
            ]
            covered += sum(checks)
            tried += len(checks)
    print(f"{args.n} models in {time.perf_counter() - t0:.2f}s")
    print(f"max |closed form - truncated| = {worst_pi:.3e}")
    print(f"max balance residual          = {worst_res:.3e}")
    if tried:
        print(f"99% intervals covering the closed form: {covered}/{tried}")


if __name__ == "__main__":
    main()
