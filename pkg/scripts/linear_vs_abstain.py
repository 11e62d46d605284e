"""Robust error of a ridge linear classifier next to the abstaining
nearest-neighbour classifier over a range of thresholds, on Gaussian
clusters under random-subspace attacks.

    python3 scripts/linear_vs_abstain.py --n2 10 --n3 1 --trials 20
"""

import argparse
import csv
import sys

import numpy as np

from subspace_abstain.classifier import build_model, train_linear_baseline
from subspace_abstain.data import gen_gaussian_clusters, random_split, within_nn_distances
from subspace_abstain.metrics import robust_error_linear_mc, robust_error_mc


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n2", type=int, default=10)
    p.add_argument("--n3", type=int, default=1)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--per-class", type=int, default=60)
    p.add_argument("--separation", type=float, default=6.0)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--taus", type=float, nargs="+")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    centers = np.zeros((args.classes, args.n2))
    centers[:, 0] = args.separation * np.arange(args.classes)
    ds = gen_gaussian_clusters(args.n2, args.per_class, centers, 1.0, seed=args.seed)
    train, test = random_split(ds, args.seed + 1, 0.8)
    # thresholds on the scale of typical nearest-neighbour distances
    scale = float(np.median(within_nn_distances(train)))
    taus = args.taus or list(np.round(np.linspace(0.0, 2.0, 9) * scale, 4))

    w = csv.writer(sys.stdout)
    w.writerow(["model", "tau", "sigma", "e_nat", "d_nat", "e_adv", "e_adv_ci95"])
    lin = robust_error_linear_mc(train_linear_baseline(train), test, args.n3, args.trials, args.seed)
    w.writerow(["linear", "", "", lin.e_nat, 0.0, lin.e_adv_mean, lin.e_adv_ci95])
    for tau in taus:
        model = build_model(train, tau, args.sigma)
        rep = robust_error_mc(model, test, args.n3, args.trials, args.seed, threads=args.threads)
        w.writerow(["abstain", tau, args.sigma, rep.e_nat, rep.d_nat, rep.e_adv_mean, rep.e_adv_ci95])


if __name__ == "__main__":
    main()
