"""Median per-round regret of the threshold forecaster over seeds on a
two-cluster stream.

    python3 scripts/regret_curve.py --rounds 200 --batch 20 --seeds 10 --lambda 0.5
"""

import argparse
import csv
import sys

import numpy as np

from subspace_abstain.data import gen_gaussian_clusters
from subspace_abstain.rng import derive_seed, make_rng
from subspace_abstain.tuner import run_online


def two_cluster_stream(seed, rounds, batch, separation):
    centers = np.array([[0.0, 0.0], [separation, 0.0]])
    train = gen_gaussian_clusters(2, 10, centers, 1.0, seed=derive_seed(seed, 0))
    pool = gen_gaussian_clusters(2, rounds * batch // 2 + 1, centers, 1.0, seed=derive_seed(seed, 1))
    idx = make_rng(seed, 2).permutation(len(pool))
    return train, [pool.subset(idx[t * batch:(t + 1) * batch]) for t in range(rounds)]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rounds", type=int, default=200)
    p.add_argument("--batch", type=int, default=20)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--subspaces-per-batch", type=int, default=2)
    p.add_argument("--separation", type=float, default=3.0)
    p.add_argument("--lambda", dest="lam", type=float, help="default sqrt(ln 1000 / rounds)")
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    curves = []
    for s in range(args.seeds):
        train, stream = two_cluster_stream(derive_seed(args.seed, s), args.rounds, args.batch,
                                           args.separation)
        run = run_online(train, 0.0, stream, 1, args.subspaces_per_batch, args.c,
                         seed=derive_seed(args.seed, s, 1), lam=args.lam)
        curves.append(np.array(run.regret_curve) / np.arange(1, args.rounds + 1))
    med = np.median(np.array(curves), axis=0)
    w = csv.writer(sys.stdout)
    w.writerow(["t", "median_regret_per_round"])
    for t, v in enumerate(med, start=1):
        w.writerow([t, v])


if __name__ == "__main__":
    main()
