"""Finite-N Monte Carlo exponent against the large-N limit.

Prints E_N, its relative gap to E and the effective sample size for a grid
of antenna counts and rates. Small ESS means the log-mean-exp is carried by
a handful of rare channels and E_N is biased upward.

    python3 scripts/mc_convergence.py --samples 20000 --seeds 3
"""
import argparse
import warnings

import numpy as np

from gallager_mimo import exponent as ex
from gallager_mimo import rmt_core as rmt
from gallager_mimo.finite_n_mc import McConfig, estimate_en
from gallager_mimo.rmt_core import ChannelParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--beta", type=float, default=3.0)
    ap.add_argument("--sigma2", type=float, default=0.05)
    ap.add_argument("--alpha", type=float, default=2.0)
    ap.add_argument("--fractions", type=float, nargs="+", default=[0.9, 0.8, 0.6])
    ap.add_argument("--ns", type=int, nargs="+", default=[2, 4, 6, 8])
    ap.add_argument("--samples", type=int, default=20000)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    warnings.simplefilter("ignore", RuntimeWarning)

    p = ChannelParams(args.beta, args.sigma2, args.alpha, 1)
    r_erg = rmt.ergodic_rate(p)
    print(f"r_erg = {r_erg:.6f} nats, samples = {args.samples}, seeds = {args.seeds}")
    print(f"{'r/r_erg':>8} {'E':>9} {'n':>3} {'E_N (median)':>13} {'gap':>7} {'ESS (median)':>13}")
    for f in args.fractions:
        r = f * r_erg
        e = ex.gallager_exponent(r, p).e
        for n in args.ns:
            runs = [estimate_en(McConfig(n, p, r, args.samples, seed, args.workers))
                    for seed in range(args.seeds)]
            e_n = np.median([x.e_n for x in runs])
            gap = np.median([abs(x.e_n - e) / e for x in runs])
            ess = np.median([x.ess for x in runs])
            print(f"{f:8.2f} {e:9.4f} {n:3d} {e_n:13.4f} {gap:7.3f} {ess:13.1f}")


if __name__ == "__main__":
    main()
