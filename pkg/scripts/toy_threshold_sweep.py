"""Optimal threshold of the two-segment model across m, with an optional
Monte Carlo grid search over g next to the bisected value.

    python3 scripts/toy_threshold_sweep.py --r 100 --m 10 100 1000 --mc-trials 200000
"""

import argparse
import csv
import sys

import numpy as np

from subspace_abstain.bounds import toy_optimal_tau_report
from subspace_abstain.rng import derive_seed
from subspace_abstain.verify import mc_toy_g_grid


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--D", type=float, default=1.0)
    p.add_argument("--r", type=float, default=100.0)
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--m", type=int, nargs="+", default=[10, 30, 100, 300, 1000])
    p.add_argument("--convention", choices=("directed_ray", "full_line"), default="directed_ray")
    p.add_argument("--mc-trials", type=int, default=0, help="0 skips the Monte Carlo grid")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    w = csv.writer(sys.stdout)
    w.writerow(["m", "tau_star", "scale", "ratio", "zero_case", "mc_argmin", "grid_step"])
    for m in args.m:
        rep = toy_optimal_tau_report(args.D, args.r, m, args.c, args.convention)
        mc_arg = step = ""
        if args.mc_trials and not rep.zero_case:
            step = min(args.D / 100, rep.scale / 10)
            grid = np.arange(0.0, args.D / 2, step)
            g = mc_toy_g_grid(args.D, args.r, m, args.c, grid, args.mc_trials,
                              derive_seed(args.seed, m), args.convention)
            mc_arg = float(grid[int(np.argmin(g))])
        w.writerow([m, rep.tau, rep.scale, rep.ratio, rep.zero_case, mc_arg, step])


if __name__ == "__main__":
    main()
