"""Monte Carlo estimators used to check the closed forms in ``bounds`` and
``geometry`` against simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (KappaBoundedSubspaceConfig, sample_kappa_bounded_subspaces,
                       sample_uniform_subspaces)
from .metrics import clopper_pearson, normal_ci95
from .rng import make_rng

_CHUNK = 100_000


@dataclass(frozen=True)
class Estimate:
    hits: int
    trials: int

    @property
    def p(self) -> float:
        return self.hits / self.trials

    @property
    def ci95(self) -> float:
        return normal_ci95(self.p, self.trials)

    @property
    def interval(self):
        """Exact 95% interval; meaningful even with zero hits."""
        return clopper_pearson(self.hits, self.trials)

    def covers(self, value: float) -> bool:
        lo, hi = self.interval
        return lo <= value <= hi


def mc_sphere_cap(n: int, k: int, eps: float, samples: int, seed: int) -> Estimate:
    """Uniform points on S^{n-1} whose last k coordinates have norm <= eps."""
    hits = 0
    for c, start in enumerate(range(0, samples, _CHUNK)):
        cnt = min(_CHUNK, samples - start)
        g = make_rng(seed, c).standard_normal((cnt, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        hits += int(np.sum(np.linalg.norm(g[:, n - k:], axis=1) <= eps))
    return Estimate(hits, samples)


def _residuals(bases: np.ndarray, axis: np.ndarray) -> np.ndarray:
    proj = np.einsum("tnk,n->tk", bases, axis)
    return np.sqrt(np.clip(1.0 - np.sum(proj * proj, axis=1), 0.0, None))


def mc_single_point_success(n2: int, n3: int, ratio: float, trials: int, seed: int,
                            adversary: KappaBoundedSubspaceConfig | None = None,
                            axis=None) -> Estimate:
    """Fraction of subspaces S for which x + S passes strictly within
    ratio * r of a single opposite-label point at distance r from x.

    That is the event dist(axis, S) < ratio for the unit vector ``axis``
    pointing from x to the opposite point.
    """
    if axis is None:
        axis = adversary.cone_axis if adversary is not None else np.eye(n2)[0]
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    hits = 0
    for c, start in enumerate(range(0, trials, _CHUNK)):
        cnt = min(_CHUNK, trials - start)
        rng = make_rng(seed, c)
        if adversary is None:
            bases = sample_uniform_subspaces(n2, n3, cnt, rng)
        else:
            bases = sample_kappa_bounded_subspaces(adversary, cnt, rng)
        hits += int(np.sum(_residuals(bases, axis) < ratio))
    return Estimate(hits, trials)


# ---- two-segment toy model ----

def _toy_training(rng, trials, D, r, m):
    a = rng.uniform(0.0, D, (trials, m))
    b = D + r + rng.uniform(0.0, D, (trials, m))
    return a, b


def mc_toy_abstention(D: float, r: float, m: int, taus, trials: int, seed: int,
                      chunk: int = 5000) -> np.ndarray:
    """Abstention rate per tau; every trial draws a fresh training set and one
    test point from a uniformly chosen class, and scans all 2m points."""
    taus = np.asarray(taus, dtype=float)
    counts = np.zeros(taus.size)
    for c, start in enumerate(range(0, trials, chunk)):
        cnt = min(chunk, trials - start)
        rng = make_rng(seed, c)
        a, b = _toy_training(rng, cnt, D, r, m)
        cls = rng.integers(0, 2, cnt)
        p = np.where(cls == 0, rng.uniform(0.0, D, cnt), D + r + rng.uniform(0.0, D, cnt))
        pts = np.concatenate([a, b], axis=1)
        nn = np.min(np.abs(pts - p[:, None]), axis=1)
        counts += np.sum(nn[:, None] >= taus[None, :], axis=0)
    return counts / trials


def _toy_attack_hits(a, b, cls, p, theta, tau, directed):
    """Geometric attack on the line (or ray) through (p, 0) with angle theta.

    For each opposite-label point the closest point of the line/ray is its
    foot; the best foot is then checked with a direct nearest-neighbour scan.
    """
    opp = np.where(cls[:, None] == 0, b, a)
    v0, v1 = np.cos(theta), np.sin(theta)
    t = (opp - p[:, None]) * v0[:, None]
    if directed:
        t = np.maximum(t, 0.0)
    fx = p[:, None] + t * v0[:, None]
    fy = t * v1[:, None]
    dist = np.hypot(fx - opp, fy)
    j = np.argmin(dist, axis=1)
    rows = np.arange(p.size)
    ex, ey = fx[rows, j], fy[rows, j]
    pts = np.concatenate([a, b], axis=1)
    labels = np.concatenate([np.zeros(a.shape[1], dtype=int), np.ones(b.shape[1], dtype=int)])
    d_all = np.hypot(pts - ex[:, None], ey[:, None])
    k = np.argmin(d_all, axis=1)
    return (d_all[rows, k] < tau) & (labels[k] != cls)


def mc_toy_robust_accuracy(D: float, r: float, m: int, tau: float, trials: int, seed: int,
                           convention: str = "full_line", chunk: int = 5000) -> Estimate:
    """Fraction of (training set, test point, direction) draws NOT attacked."""
    directed = convention == "directed_ray"
    safe = 0
    for c, start in enumerate(range(0, trials, chunk)):
        cnt = min(chunk, trials - start)
        rng = make_rng(seed, c)
        a, b = _toy_training(rng, cnt, D, r, m)
        cls = rng.integers(0, 2, cnt)
        p = np.where(cls == 0, rng.uniform(0.0, D, cnt), D + r + rng.uniform(0.0, D, cnt))
        theta = rng.uniform(0.0, 2.0 * math.pi, cnt)
        hit = _toy_attack_hits(a, b, cls, p, theta, tau, directed)
        safe += int(cnt - hit.sum())
    return Estimate(safe, trials)


def sample_min_uniform(rng, D: float, m: int, size: int) -> np.ndarray:
    """Minimum of m i.i.d. Uniform(0, D) by inverting its survival (1 - u/D)^m."""
    v = rng.uniform(size=size)
    return D * (1.0 - v ** (1.0 / m))


def toy_conditional_abstention(p: np.ndarray, tau: np.ndarray, D: float, m: int) -> np.ndarray:
    """P(no own-class training point strictly within tau of position p)."""
    covered = np.minimum(p + tau, D) - np.maximum(p - tau, 0.0)
    return np.clip(1.0 - covered / D, 0.0, 1.0) ** m


def mc_toy_g_grid(D: float, r: float, m: int, c: float, taus, trials: int, seed: int,
                  convention: str = "directed_ray", chunk: int = 200_000) -> np.ndarray:
    """Monte Carlo g(tau) on a grid with common random numbers.

    Conditional Monte Carlo: per draw of the test position and of the
    nearest opposite training point, the direction and the own-class
    training set are integrated out exactly (attack probability
    k/pi * arcsin(tau/s), abstention (1 - covered/D)^m).
    """
    taus = np.asarray(taus, dtype=float)
    k = 1.0 if convention == "directed_ray" else 2.0
    acc = np.zeros(taus.size)
    for ci, start in enumerate(range(0, trials, chunk)):
        cnt = min(chunk, trials - start)
        rng = make_rng(seed, ci)
        p = rng.uniform(0.0, D, cnt)
        s = (D - p) + r + sample_min_uniform(rng, D, m, cnt)
        for j, tau in enumerate(taus):
            att = k / math.pi * np.arcsin(np.minimum(tau / s, 1.0))
            abst = toy_conditional_abstention(p, np.full(cnt, tau), D, m)
            acc[j] += np.sum(att + c * abst)
    return acc / trials


# ---- coverage fixture ----

def coverage_fixture_sample(rng, count: int, centers: np.ndarray, radius: float, delta: float,
                            outlier_center: np.ndarray, outlier_radius: float):
    """Mixture: with prob 1-delta a uniform point in a random ball B(center_k, radius),
    else a uniform point in a far-away ball of radius outlier_radius."""
    n2 = centers.shape[1]
    out = rng.uniform(size=count) < delta
    k = rng.integers(0, centers.shape[0], count)
    base = np.where(out[:, None], outlier_center[None, :], centers[k])
    rad = np.where(out, outlier_radius, radius)
    g = rng.standard_normal((count, n2))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    u = rng.uniform(size=count) ** (1.0 / n2)
    labels = np.where(out, 0, k % 2)
    return base + (rad * u)[:, None] * g, labels
