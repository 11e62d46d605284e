"""Natural error, abstention rate, Monte Carlo robust error and exact
tau-curves of all three."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from .attack import attack_linear_exact, critical_threshold, exact_attack
from .classifier import (ABSTAIN, LinearModel, RobustModel, build_model, predict_batch,
                         predict_linear_batch)
from .data import LabeledDataset, nearest_neighbors
from .errors import ContractError, NonConvergedError
from .geometry import (KappaBoundedSubspaceConfig, Subspace, sample_kappa_bounded_subspaces,
                       sample_uniform_subspaces)
from .piecewise import PiecewiseConstantFn
from .rng import make_rng

NONCONVERGED_TOLERANCE = 1e-3


def natural_error(model: RobustModel, test: LabeledDataset) -> float:
    pred = predict_batch(model, test.features)
    return float(np.mean((pred != ABSTAIN) & (pred != test.labels)))


def abstention_rate(model: RobustModel, test: LabeledDataset) -> float:
    pred = predict_batch(model, test.features)
    return float(np.mean(pred == ABSTAIN))


def normal_ci95(p: float, n: int) -> float:
    return 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / n) if n else math.inf


def clopper_pearson(k: int, n: int, level: float = 0.95):
    """Exact binomial interval (lo, hi)."""
    a = 1.0 - level
    lo = 0.0 if k == 0 else float(stats.beta.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


@dataclass
class MetricsReport:
    e_nat: float
    d_nat: float
    e_adv_mean: float
    e_adv_ci95: float
    subspace_trials: int
    seeds: dict
    n_pairs: int = 0
    nonconverged: int = 0
    e_adv_interval: tuple | None = None  # exact interval when requested

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["e_adv_interval"] is not None:
            d["e_adv_interval"] = list(d["e_adv_interval"])
        return d


def _subspace_batch(n2, n3, trials, seed, point_index, adversary):
    rng = make_rng(seed, point_index)
    if adversary is None or adversary == "uniform":
        return sample_uniform_subspaces(n2, n3, trials, rng)
    if isinstance(adversary, KappaBoundedSubspaceConfig):
        if adversary.ambient_dim != n2 or adversary.subspace_dim != n3:
            raise ContractError("adversary config dimensions do not match")
        return sample_kappa_bounded_subspaces(adversary, trials, rng)
    raise ContractError(f"unknown adversary {adversary!r}")


def _run_pairs(fn, count, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(count)))
    return [fn(a) for a in range(count)]


def _summarize(hits, nonconv, e_nat, d_nat, trials, seeds, exact_ci):
    n_total = hits.size
    n_bad = int(nonconv.sum())
    if n_bad and n_bad >= NONCONVERGED_TOLERANCE * n_total:
        raise NonConvergedError(f"{n_bad} of {n_total} attacks did not converge")
    valid = hits[~nonconv]
    n = valid.size
    k = int(valid.sum())
    p = k / n if n else 0.0
    return MetricsReport(e_nat, d_nat, p, normal_ci95(p, n), trials, seeds, n, n_bad,
                         clopper_pearson(k, n) if exact_ci else None)


def robust_error_mc(model: RobustModel, test: LabeledDataset, n3: int, trials: int, seed: int,
                    adversary=None, threads: int = 1, exact_ci: bool = False) -> MetricsReport:
    """Exact attack on every (test point, sampled subspace) pair.

    Subspaces for test point a come from the stream (seed, a), so the
    result does not depend on ``threads``.
    """
    if trials < 1:
        raise ContractError("trials must be >= 1")
    n2 = test.dim

    def one(a):
        bases = _subspace_batch(n2, n3, trials, seed, a, adversary)
        x, y = test.features[a], int(test.labels[a])
        hit = np.zeros(trials, dtype=bool)
        bad = np.zeros(trials, dtype=bool)
        for t in range(trials):
            try:
                hit[t] = exact_attack(model, x, y, Subspace(bases[t])).success
            except NonConvergedError:
                bad[t] = True
        return hit, bad

    res = _run_pairs(one, len(test), threads)
    hits = np.concatenate([r[0] for r in res])
    bad = np.concatenate([r[1] for r in res])
    seeds = {"subspace_seed": int(seed), "adversary": "uniform" if adversary in (None, "uniform") else "kappa"}
    return _summarize(hits, bad, natural_error(model, test), abstention_rate(model, test),
                      trials, seeds, exact_ci)


def robust_error_linear_mc(model: LinearModel, test: LabeledDataset, n3: int, trials: int,
                           seed: int, exact_ci: bool = False) -> MetricsReport:
    """Same protocol as ``robust_error_mc`` against the always-predicting linear baseline."""
    n2 = test.dim
    hits = np.zeros((len(test), trials), dtype=bool)
    for a in range(len(test)):
        bases = _subspace_batch(n2, n3, trials, seed, a, None)
        x, y = test.features[a], int(test.labels[a])
        for t in range(trials):
            hits[a, t] = attack_linear_exact(model, x, y, Subspace(bases[t]))
    pred = predict_linear_batch(model, test.features)
    e_nat = float(np.mean(pred != test.labels))
    return _summarize(hits.ravel(), np.zeros(hits.size, dtype=bool), e_nat, 0.0, trials,
                      {"subspace_seed": int(seed), "adversary": "uniform"}, exact_ci)


class Curves(NamedTuple):
    e_adv: PiecewiseConstantFn
    d_nat: PiecewiseConstantFn
    g: PiecewiseConstantFn


def nn_distances(model: RobustModel, test: LabeledDataset) -> np.ndarray:
    return nearest_neighbors(model.train, test.features)[1]


def tau_crit_matrix(model: RobustModel, test: LabeledDataset, bases, threads: int = 1) -> np.ndarray:
    """(|test|, |bases|) critical thresholds."""
    bases = [b.basis if isinstance(b, Subspace) else np.asarray(b) for b in bases]
    subs = [Subspace(b) for b in bases]

    def one(a):
        x, y = test.features[a], int(test.labels[a])
        return [critical_threshold(model, x, y, S) for S in subs]

    rows = _run_pairs(one, len(test), threads)
    return np.array(rows, dtype=float).reshape(len(test), len(subs))


def curves_from_thresholds(nn: np.ndarray, tcrit: np.ndarray, c: float, lo: float, hi: float) -> Curves:
    n = nn.size
    d_nat = PiecewiseConstantFn.from_thresholds(lo, hi, at_most=nn, weight=1.0 / n)
    if tcrit.size:
        e_adv = PiecewiseConstantFn.from_thresholds(lo, hi, above=tcrit.ravel(), weight=1.0 / tcrit.size)
    else:
        e_adv = PiecewiseConstantFn.constant(lo, hi, 0.0)
    g = e_adv + d_nat * c
    for f in (d_nat, e_adv):
        if f.min() < -1e-12 or f.max() > 1 + 1e-12:
            raise AssertionError("curve left [0, 1]")
    if not e_adv.is_nondecreasing() or not d_nat.is_nonincreasing():
        raise AssertionError("curve monotonicity violated")
    return Curves(e_adv, d_nat, g)


def default_curve_domain(nn: np.ndarray, tcrit: np.ndarray) -> tuple:
    vals = np.concatenate([nn.ravel(), tcrit.ravel()])
    vals = vals[np.isfinite(vals)]
    top = float(vals.max()) if vals.size else 1.0
    return 0.0, max(2.0 * top, 1e-12)


def curves_for_model(model: RobustModel, test: LabeledDataset, bases, c: float,
                     domain: tuple | None = None, threads: int = 1) -> Curves:
    nn = nn_distances(model, test)
    tcrit = tau_crit_matrix(model, test, bases, threads) if len(bases) else np.zeros((len(test), 0))
    lo, hi = domain if domain is not None else default_curve_domain(nn, tcrit)
    return curves_from_thresholds(nn, tcrit, c, lo, hi)


def curves_vs_tau(trainset: LabeledDataset, sigma: float, test: LabeledDataset, bases, c: float,
                  domain: tuple | None = None, threads: int = 1) -> Curves:
    """Exact E_adv, D_nat and g = E_adv + c D_nat as step functions of tau
    for a fixed list of subspaces (bases or Subspace objects)."""
    model = build_model(trainset, tau=math.inf, sigma=sigma)
    return curves_for_model(model, test, bases, c, domain, threads)


def fixed_subspace_robust_error(model: RobustModel, test: LabeledDataset, bases, tau: float) -> float:
    """Pointwise recomputation of the curve value with the exact attack."""
    if not len(bases):
        return 0.0
    hits = 0
    for x, y in zip(test.features, test.labels):
        for b in bases:
            S = b if isinstance(b, Subspace) else Subspace(b)
            hits += exact_attack(model, x, int(y), S, tau=tau).success
    return hits / (len(test) * len(bases))
