"""Seeded random attack instances shared by the attack tests and the acceptance suite."""

from dataclasses import dataclass

import numpy as np

from subspace_abstain.attack import critical_threshold
from subspace_abstain.classifier import RobustModel, build_model
from subspace_abstain.data import gen_gaussian_clusters
from subspace_abstain.geometry import Subspace, sample_uniform_subspace
from subspace_abstain.rng import make_rng

BOUNDARY_TOL = 1e-6


@dataclass
class Instance:
    model: RobustModel
    x: np.ndarray
    y: int
    S: Subspace
    tau: float
    tau_crit: float


def attack_instance(index: int, seed: int = 2024) -> Instance:
    """n2 in {2,3,4}, n3 in {1,2}, m <= 12 Gaussian clusters; every other
    instance puts tau within 1e-5..1e-2 of the critical threshold."""
    rng = make_rng(seed, index)
    n2 = int(rng.choice([2, 3, 4]))
    n3 = 1 if n2 == 2 else int(rng.choice([1, 2]))
    k = int(rng.integers(2, 4))
    per = [int(v) for v in rng.integers(1, 12 // k + 1, k)]
    centers = rng.normal(0.0, 2.0, (k, n2))
    ds = gen_gaussian_clusters(n2, per, centers, 1.0, seed=int(rng.integers(2**31)))
    y = int(rng.integers(0, k))
    x = centers[y] + rng.normal(0.0, 1.0, n2)
    S = sample_uniform_subspace(n2, n3, int(rng.integers(2**31)))
    model = build_model(ds, 1.0)
    tc = critical_threshold(model, x, y, S)
    if index % 2 == 0 or not np.isfinite(tc):
        tau = float(rng.uniform(0.0, 4.0))
    else:
        tau = tc + float(rng.choice([-1.0, 1.0])) * 10 ** float(rng.uniform(-5, -2))
        tau = max(tau, 0.0)
    return Instance(model.with_tau(tau), x, y, S, tau, tc)
