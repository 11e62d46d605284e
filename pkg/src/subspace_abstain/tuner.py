"""Choosing tau from data: a continuous exponential forecaster over an
interval of thresholds, regret accounting, online-to-batch conversion and a
joint (tau, sigma) grid search."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classifier import build_model
from .data import LabeledDataset, within_nn_distances
from .errors import ConfigError, ContractError, EmptyModelError
from .geometry import sample_uniform_subspaces
from .metrics import curves_for_model, curves_vs_tau
from .piecewise import PiecewiseConstantFn
from .rng import derive_seed, make_rng


@dataclass(frozen=True, eq=False)
class ForecasterState:
    lam: float
    lo: float
    hi: float
    cumulative_utility: PiecewiseConstantFn
    round: int = 1


def ef_init(lo: float, hi: float, lam: float) -> ForecasterState:
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ConfigError("forecaster domain must be a finite interval lo < hi")
    if not lam > 0:
        raise ConfigError("lambda must be positive")
    return ForecasterState(float(lam), float(lo), float(hi),
                           PiecewiseConstantFn.constant(lo, hi, 0.0), 1)


def default_lambda(rounds: int, resolution: float = 1e-3) -> float:
    """sqrt(ln(1/resolution) / T): the one-dimensional step size with w = resolution * |C|."""
    return math.sqrt(math.log(1.0 / resolution) / max(1, rounds))


def piece_masses(state: ForecasterState) -> np.ndarray:
    """Unnormalised piece weights length * exp(lam * (value - top))."""
    f = state.cumulative_utility
    lengths = f.lengths
    live = lengths > 0
    top = float(np.max(f.values[live]))
    masses = np.where(live, lengths * np.exp(state.lam * (f.values - top)), 0.0)
    assert np.isfinite(masses).all() and masses.sum() > 0
    return masses


def density(state: ForecasterState, tau) -> np.ndarray:
    """Normalised sampling density at tau."""
    f = state.cumulative_utility
    masses = piece_masses(state)
    live = f.lengths > 0
    top = float(np.max(f.values[live]))
    return np.exp(state.lam * (np.asarray(f(tau)) - top)) / masses.sum()


def ef_sample(state: ForecasterState, seed: int) -> float:
    rng = make_rng(seed)
    masses = piece_masses(state)
    p = masses / masses.sum()
    k = int(rng.choice(p.size, p=p))
    f = state.cumulative_utility
    return float(rng.uniform(f.lefts[k], f.rights[k]))


def ef_update(state: ForecasterState, u: PiecewiseConstantFn) -> ForecasterState:
    if u.lo > state.lo or u.hi < state.hi:
        raise ContractError("utility must be defined on the whole forecaster domain")
    if u.min() < 0.0 or u.max() > 1.0:
        raise ContractError("utilities must lie in [0, 1]")
    cum = state.cumulative_utility + u
    return ForecasterState(state.lam, state.lo, state.hi, cum, state.round + 1)


def utility_from_g(g: PiecewiseConstantFn, c: float) -> PiecewiseConstantFn:
    """u = 1 - g / (1 + c), with g clamped to its range [0, 1 + c] against rounding."""
    return g.map(lambda v: 1.0 - np.clip(v, 0.0, 1.0 + c) / (1.0 + c))


def default_domain(train: LabeledDataset) -> tuple:
    d = within_nn_distances(train)
    d = d[np.isfinite(d)]
    top = float(d.max()) if d.size else 1.0
    return 0.0, 2.0 * top if top > 0 else 1.0


@dataclass
class OnlineRun:
    tau_history: list
    utilities: list          # per-round PiecewiseConstantFn
    g_curves: list           # per-round PiecewiseConstantFn
    realized: list           # u_t(tau_t)
    regret_curve: list
    state: ForecasterState
    domain: tuple
    lam: float

    @property
    def cumulative_utility(self) -> PiecewiseConstantFn:
        return self.state.cumulative_utility


def run_online(train: LabeledDataset, sigma: float, stream, n3: int, subspaces_per_batch: int,
               c: float, seed: int, lam: float | None = None, domain: tuple | None = None,
               threads: int = 1) -> OnlineRun:
    """Forecaster over a stream of test batches.

    Round t draws tau_t from the current weights first, then builds the
    round's utility from fresh subspaces and updates.
    """
    stream = list(stream)
    if not stream:
        raise ContractError("stream is empty")
    model = build_model(train, tau=math.inf, sigma=sigma)
    lo, hi = domain if domain is not None else default_domain(model.train)
    lam = default_lambda(len(stream)) if lam is None else float(lam)
    state = ef_init(lo, hi, lam)
    n2 = train.dim
    taus, utils, gs, realized, regret = [], [], [], [], []
    total = 0.0
    for t, batch in enumerate(stream):
        tau_t = ef_sample(state, derive_seed(seed, t, 0))
        bases = sample_uniform_subspaces(n2, n3, subspaces_per_batch, make_rng(seed, t, 1))
        curves = curves_for_model(model, batch, list(bases), c, domain=(lo, hi), threads=threads)
        u = utility_from_g(curves.g, c)
        state = ef_update(state, u)
        got = u(tau_t)
        total += got
        taus.append(tau_t)
        utils.append(u)
        gs.append(curves.g)
        realized.append(got)
        regret.append(state.cumulative_utility.max() - total)
    return OnlineRun(taus, utils, gs, realized, regret, state, (lo, hi), lam)


def regret_bruteforce(utilities, taus) -> list:
    """Regret recomputed by evaluating every round's utility on a probe set
    containing each breakpoint and a point just to its right."""
    lo, hi = utilities[0].lo, utilities[0].hi
    probes = np.unique(np.concatenate([u.probe_points() for u in utilities]))
    probes = probes[(probes >= lo) & (probes <= hi)]
    acc = np.zeros(probes.size)
    total = 0.0
    out = []
    for u, tau in zip(utilities, taus):
        acc = acc + u(probes)
        total += u(tau)
        out.append(float(acc.max() - total))
    return out


@dataclass
class BatchConversion:
    support: list            # distinct thresholds
    probabilities: list
    expected_g: float        # mean of g(tau_t)
    best_g: float            # min of g over the curve
    gap: float               # expected_g - best_g

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def online_to_batch(tau_history, g_curve: PiecewiseConstantFn) -> BatchConversion:
    """Randomised threshold uniform over the forecaster's history."""
    taus = np.asarray(tau_history, dtype=float)
    if taus.size == 0:
        raise ContractError("history is empty")
    support, counts = np.unique(taus, return_counts=True)
    probs = counts / taus.size
    expected = float(np.dot(probs, np.atleast_1d(g_curve(support))))
    best = g_curve.min()
    return BatchConversion(support.tolist(), probs.tolist(), expected, best,
                           expected - best)


def average_g(g_curves) -> PiecewiseConstantFn:
    total = g_curves[0]
    for g in g_curves[1:]:
        total = total + g
    return total * (1.0 / len(g_curves))


def conversion_decomposition(run: OnlineRun, c: float) -> dict:
    """Split the batch gap on the averaged validation curve into
    (1 + c) * regret / T plus the drift between each round's own g and the
    average curve at the sampled thresholds. Holds exactly; the drift is 0
    when every round sees the same curve."""
    T = len(run.tau_history)
    gbar = average_g(run.g_curves)
    conv = online_to_batch(run.tau_history, gbar)
    own = float(np.mean([g(t) for g, t in zip(run.g_curves, run.tau_history)]))
    drift = conv.expected_g - own
    return {"gap": conv.gap, "regret_term": (1.0 + c) * run.regret_curve[-1] / T,
            "drift": drift, "expected_g": conv.expected_g, "best_g": conv.best_g}


@dataclass
class GridResult:
    tau: float
    sigma: float
    g: float
    table: dict = field(default_factory=dict)  # sigma -> list of g over tau_grid (None if invalid)


def tune_tau_sigma_grid(train: LabeledDataset, test: LabeledDataset, bases, c: float,
                        tau_grid, sigma_grid, threads: int = 1) -> GridResult:
    """Exact g(tau, sigma) on a grid; ties go to the smallest sigma, then tau."""
    tau_grid = sorted(float(t) for t in tau_grid)
    sigma_grid = sorted(float(s) for s in sigma_grid)
    if not tau_grid or not sigma_grid:
        raise ContractError("grids must be nonempty")
    if sigma_grid[0] < 0:
        raise ContractError("sigma values must be nonnegative")
    lo = min(0.0, tau_grid[0])
    hi = max(tau_grid[-1], lo) + 1.0
    best = None
    table = {}
    for s in sigma_grid:
        try:
            curves = curves_vs_tau(train, s, test, bases, c, domain=(lo, hi), threads=threads)
        except EmptyModelError:
            table[s] = None
            continue
        vals = [curves.g(t) for t in tau_grid]
        table[s] = vals
        for t, v in zip(tau_grid, vals):
            if best is None or v < best[2]:
                best = (t, s, v)
    if best is None:
        raise EmptyModelError("every sigma in the grid empties the training set")
    return GridResult(best[0], best[1], best[2], table)
