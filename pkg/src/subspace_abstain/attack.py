"""Adversaries restricted to an affine subspace x + S.

Coordinates: a point of x + S is written e = x + B c with B the orthonormal
basis of S. For a training point p, write d_p = p - x, C_p = B^T d_p and
rho_p = ||d_p - B C_p|| (the part of d_p that S cannot reach). Then
||e - p||^2 = ||c - C_p||^2 + rho_p^2, and "e is at least as close to p as to
w" is the halfspace 2 (C_w - C_p)^T c <= ||d_w||^2 - ||d_p||^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .classifier import ABSTAIN, LinearModel, RobustModel, predict, predict_linear
from .errors import ContractError, DimensionError, NonConvergedError
from .geometry import Subspace
from .qp import DEFAULT_MAX_ITER, project_onto_polyhedron

MEMBERSHIP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class AttackSuccess:
    adv_point: np.ndarray
    target_index: int
    distance_to_target: float

    success = True


@dataclass(frozen=True)
class NoAdversarialExample:
    success = False


NO_ADVERSARIAL = NoAdversarialExample()


@dataclass(frozen=True, eq=False)
class Halfspace:
    """{z : normal^T z <= offset}."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if not np.any(n):
            raise ContractError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))


class _Infeasible:
    def __repr__(self):
        return "INFEASIBLE"

    def __bool__(self):
        return False


INFEASIBLE = _Infeasible()


def solve_constrained_projection(target, constraints, origin, S: Subspace,
                                 tol: float = 1e-8, max_iter: int = DEFAULT_MAX_ITER):
    """Closest point to ``target`` on (origin + S) within all halfspaces, or INFEASIBLE."""
    target = np.asarray(target, dtype=float)
    origin = np.asarray(origin, dtype=float)
    B = S.basis
    ct = B.T @ (target - origin)
    if constraints:
        A = np.array([hs.normal for hs in constraints])
        b = np.array([hs.offset for hs in constraints])
        G = A @ B
        h = b - A @ origin
    else:
        G = np.zeros((0, S.dim))
        h = np.zeros(0)
    res = project_onto_polyhedron(ct, G, h, tol=tol, max_iter=max_iter)
    if not res.feasible:
        return INFEASIBLE
    return origin + B @ res.point


# ---- shared geometry for the exact attack ----

@dataclass(frozen=True, eq=False)
class _Frame:
    C: np.ndarray      # (m, n3) coordinates of projections
    rho: np.ndarray    # (m,) residual distances to x + S
    sq: np.ndarray     # (m,) ||p - x||^2
    wrong: np.ndarray  # indices with label != y
    same: np.ndarray   # indices with label == y


def _frame(train_x, train_y, x, y, S: Subspace) -> _Frame:
    x = np.asarray(x, dtype=float)
    if x.shape != (train_x.shape[1],) or S.ambient_dim != x.size:
        raise DimensionError("point, training set and subspace dimensions disagree")
    d = train_x - x
    C = d @ S.basis
    rho = np.linalg.norm(d - C @ S.basis.T, axis=1)
    sq = np.sum(d * d, axis=1)
    return _Frame(C, rho, sq, np.flatnonzero(train_y != y), np.flatnonzero(train_y == y))


def _candidate(fr: _Frame, i: int, tol: float, max_iter: int, margin: float = 0.0):
    """Closest point of (x + S) to p_i among points no closer to any label-y point.

    Returns (coords, distance) or None when that region is empty.
    """
    ci = fr.C[i]
    if fr.same.size == 0:
        return ci.copy(), float(fr.rho[i])
    G = 2.0 * (fr.C[fr.same] - ci)
    h = fr.sq[fr.same] - fr.sq[i]
    if margin:
        h = h - margin * (1.0 + np.abs(h))
    if np.all(G @ ci <= h):
        return ci.copy(), float(fr.rho[i])
    res = project_onto_polyhedron(ci, G, h, tol=tol, max_iter=max_iter)
    if not res.feasible:
        return None
    c = res.point
    return c, float(math.sqrt(float(np.sum((c - ci) ** 2)) + fr.rho[i] ** 2))


def _verify(model: RobustModel, point, y, tau) -> bool:
    out = predict(model, point, tau=tau)
    return out is not None and out != y


def _in_subspace(point, x, S: Subspace) -> bool:
    d = point - x
    return float(np.linalg.norm(d - S.basis @ (S.basis.T @ d))) <= MEMBERSHIP_TOL * max(1.0, float(np.linalg.norm(d)))


_WITNESS_MARGINS = (1e-9, 1e-12, 0.0)


def _witness(model, fr, i, x, y, S, tau, tol, max_iter):
    """A re-verified adversarial point for candidate i, or None.

    The unperturbed optimum sits on a bisector whenever a constraint is
    active, where ties go by index, so a slightly tightened region is tried
    first.
    """
    for margin in _WITNESS_MARGINS:
        cand = _candidate(fr, i, tol, max_iter, margin=margin)
        if cand is None or not cand[1] < tau:
            continue
        point = x + S.basis @ cand[0]
        if _verify(model, point, y, tau):
            assert _in_subspace(point, x, S)
            dist = float(np.linalg.norm(point - model.train.features[i]))
            return AttackSuccess(point, int(i), dist)
    return None


def exact_attack(model: RobustModel, x, y_true: int, S: Subspace, tau: float | None = None,
                 tol: float = 1e-12, max_iter: int = DEFAULT_MAX_ITER):
    """Complete search for a misclassified, non-abstained point of x + S.

    Candidates are scanned in training-index order and the first re-verified
    success is returned. A candidate whose witness fails re-verification is
    skipped (this can only happen within solver tolerance of tau).
    NonConvergedError from the solver propagates: the attack never guesses.
    """
    tau = model.tau if tau is None else float(tau)
    x = np.asarray(x, dtype=float)
    fr = _frame(model.train.features, model.train.labels, x, y_true, S)
    for i in fr.wrong:
        if not fr.rho[i] < tau:  # projecting onto x + S is the best case
            continue
        cand = _candidate(fr, i, tol, max_iter)
        if cand is None or not cand[1] < tau:
            continue
        hit = _witness(model, fr, i, x, y_true, S, tau, tol, max_iter)
        if hit is not None:
            return hit
    return NO_ADVERSARIAL


def critical_threshold(model: RobustModel, x, y_true: int, S: Subspace,
                       tol: float = 1e-12, max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Smallest tau at which x + S contains an adversarial point (attack needs tau > this).

    Branch and bound over candidates ordered by their residual distance,
    which lower-bounds the constrained distance.
    """
    x = np.asarray(x, dtype=float)
    fr = _frame(model.train.features, model.train.labels, x, y_true, S)
    best = math.inf
    order = fr.wrong[np.argsort(fr.rho[fr.wrong], kind="stable")]
    for i in order:
        if fr.rho[i] >= best:
            break
        cand = _candidate(fr, i, tol, max_iter)
        if cand is not None and cand[1] < best:
            best = cand[1]
    return best


def critical_thresholds(model: RobustModel, xs, ys, bases) -> np.ndarray:
    """tau_crit for every (point, subspace) pair; shape (len(xs), len(bases))."""
    out = np.empty((len(xs), len(bases)))
    for a, (x, y) in enumerate(zip(xs, ys)):
        for b, basis in enumerate(bases):
            S = basis if isinstance(basis, Subspace) else Subspace(basis)
            out[a, b] = critical_threshold(model, x, int(y), S)
    return out


def approx_attack(model: RobustModel, x, y_true: int, S: Subspace, tau: float | None = None):
    """Try each training point's projection onto x + S as the adversarial point."""
    tau = model.tau if tau is None else float(tau)
    x = np.asarray(x, dtype=float)
    X = model.train.features
    B = S.basis
    d = X - x
    proj = x + (d @ B) @ B.T
    for j in range(X.shape[0]):
        e = proj[j]
        dist = np.sqrt(np.sum((X - e) ** 2, axis=1))
        k = int(np.argmin(dist))
        if dist[k] < tau and model.train.labels[k] != y_true:
            if _verify(model, e, y_true, tau):
                return AttackSuccess(e, k, float(dist[k]))
    return NO_ADVERSARIAL


# ---- attacks on always-predicting models ----

def line_attack(classifier: Callable, x, y_true: int, direction,
                m0: float = 1e-3, growth: float = 1.5, steps: int = 60):
    """Scan x + t*direction for t = +-m0*growth^j, j = 0..steps.

    ``classifier`` maps a (k, n2) array to k labels (ABSTAIN for abstention).
    Returns (success, witness or None); the witness is the first hit in scan
    order (increasing |t|, positive before negative).
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ContractError("direction must be a unit vector")
    mags = m0 * growth ** np.arange(steps + 1)
    signed = np.empty(2 * mags.size)
    signed[0::2] = mags
    signed[1::2] = -mags
    pts = x[None, :] + signed[:, None] * v[None, :]
    labels = np.asarray(classifier(pts))
    hit = np.flatnonzero((labels != ABSTAIN) & (labels != y_true))
    if hit.size == 0:
        return False, None
    return True, pts[hit[0]]


def attack_linear_exact(model: LinearModel, x, y_true: int, S: Subspace,
                        rel_tol: float = 1e-12) -> bool:
    """Whether some point of x + S gets a label other than y_true.

    Scores are affine, so moving far along B B^T (w_k - w_y) eventually makes
    class k beat class y unless that projection vanishes.
    """
    if predict_linear(model, x) != y_true:
        return True
    pos = np.flatnonzero(model.classes == y_true)
    if pos.size == 0:
        return True
    wy = model.weights[pos[0]]
    for k in range(model.weights.shape[0]):
        if k == pos[0]:
            continue
        diff = model.weights[k] - wy
        if np.linalg.norm(S.basis.T @ diff) > rel_tol * max(1.0, float(np.linalg.norm(diff))):
            return True
    return False


# ---- brute-force reference ----

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_GOLDEN_ITERS = 60
ORACLE_MAX_N3 = 2
ORACLE_MAX_M = 32


def _golden_max(f, lo, hi, iters=_GOLDEN_ITERS):
    """Vectorized golden-section maximization of unimodal f on [lo, hi] (arrays)."""
    a, b = lo.copy(), hi.copy()
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        nc = b - _GOLDEN * (b - a)
        nd = a + _GOLDEN * (b - a)
        c_new = np.where(left, nc, d)
        d_new = np.where(left, c, nd)
        # reuse the retained evaluation, evaluate the new one
        f_keep = np.where(left, fc, fd)
        f_new = f(np.where(left, c_new, d_new))
        fc = np.where(left, f_new, f_keep)
        fd = np.where(left, f_keep, f_new)
        c, d = c_new, d_new
    mid = 0.5 * (a + b)
    return mid, f(mid)


def brute_force_attack_oracle(model: RobustModel, x, y_true: int, S: Subspace,
                              tau: float | None = None, grid_density: int | None = None) -> bool:
    """Grid plus golden-section search over subspace coordinates.

    For each differently-labelled training point j the score
    min(tau^2 - |e - p_j|^2, min_w |e - w|^2 - |e - p_j|^2) (w over label
    y_true) is concave in the coordinates of e and positive exactly where
    e is an adversarial point won by p_j. Success is declared only if some
    probed point is misclassified without abstention by a direct scan.
    """
    tau = model.tau if tau is None else float(tau)
    X = model.train.features
    Y = model.train.labels
    m, n2 = X.shape
    n3 = S.dim
    if n3 > ORACLE_MAX_N3 or m > ORACLE_MAX_M:
        raise ContractError(f"oracle limited to n3 <= {ORACLE_MAX_N3} and m <= {ORACLE_MAX_M}")
    if tau <= 0:
        return False
    x = np.asarray(x, dtype=float)
    B = S.basis
    pts = np.vstack([X, x[None]])
    span = float(np.max(np.sqrt(np.sum((pts[:, None] - pts[None]) ** 2, axis=2))))
    R = 4.0 * max(span, tau, 1e-12)
    wrong = np.flatnonzero(Y != y_true)
    same = np.flatnonzero(Y == y_true)
    if wrong.size == 0:
        return False

    def hits(coords):
        """Direct check of candidate points given by coordinates (k, n3)."""
        e = x[None, :] + coords @ B.T
        d = np.sqrt(np.sum((e[:, None, :] - X[None, :, :]) ** 2, axis=2))
        k = np.argmin(d, axis=1)
        dk = d[np.arange(d.shape[0]), k]
        return bool(np.any((dk < tau) & (Y[k] != y_true)))

    def score(coords, j):
        """s_j at coordinates; coords (..., n3), j broadcastable index array."""
        e = x + coords @ B.T
        dj = np.sum((e - X[j]) ** 2, axis=-1)
        s = tau * tau - dj
        if same.size:
            dw = np.sum((e[..., None, :] - X[same]) ** 2, axis=-1).min(axis=-1)
            s = np.minimum(s, dw - dj)
        return s

    if n3 == 1:
        g = grid_density or 2000
        t = np.linspace(-R, R, g)
        if hits(t[:, None]):
            return True
        step = t[1] - t[0]
        js = wrong
        sc = score(t[:, None, None], js[None, :])  # (g, J)
        best = t[np.argmax(sc, axis=0)]
        lo = np.concatenate([np.maximum(best - step, -R), np.full(js.size, -R)])
        hi = np.concatenate([np.minimum(best + step, R), np.full(js.size, R)])
        jj = np.concatenate([js, js])
        arg, _ = _golden_max(lambda c: score(c[:, None], jj), lo, hi)
        return hits(arg[:, None])

    g = grid_density or 600
    t = np.linspace(-R, R, g)
    step = t[1] - t[0]
    g1, g2 = np.meshgrid(t, t, indexing="ij")
    grid = np.stack([g1.ravel(), g2.ravel()], axis=1)
    found = False
    best_pts = np.empty((wrong.size, 2))
    best_val = np.full(wrong.size, -np.inf)
    chunk = max(1, 2_000_000 // (m * n2 + 1))
    for s0 in range(0, grid.shape[0], chunk):
        c = grid[s0:s0 + chunk]
        e = x[None, :] + c @ B.T
        d2 = np.sum((e[:, None, :] - X[None, :, :]) ** 2, axis=2)  # (chunk, m)
        k = np.argmin(d2, axis=1)
        dk = d2[np.arange(c.shape[0]), k]
        if np.any((dk < tau * tau) & (Y[k] != y_true)):
            found = True
            break
        cap = np.full(c.shape[0], tau * tau)
        if same.size:
            cap = np.minimum(cap, d2[:, same].min(axis=1))
        sc = cap[:, None] - d2[:, wrong]  # s_j on the grid
        a = np.argmax(sc, axis=0)
        v = sc[a, np.arange(wrong.size)]
        upd = v > best_val
        best_val[upd] = v[upd]
        best_pts[upd] = c[a[upd]]
    if found:
        return True
    # nested golden: the inner max of a concave function is concave in the outer variable
    jj = np.concatenate([wrong, wrong])
    lo = np.concatenate([np.maximum(best_pts - step, -R), np.full((wrong.size, 2), -R)])
    hi = np.concatenate([np.minimum(best_pts + step, R), np.full((wrong.size, 2), R)])

    def inner(c1):
        def f2(c2):
            return score(np.stack([c1, c2], axis=-1), jj)
        arg2, val = _golden_max(f2, lo[:, 1], hi[:, 1], iters=45)
        inner.last = arg2
        return val

    arg1, _ = _golden_max(inner, lo[:, 0], hi[:, 0], iters=45)
    inner(arg1)
    probes = np.stack([arg1, inner.last], axis=1)
    return hits(np.vstack([probes, best_pts]))


def nonconverged_guard(fn, *args, **kw):
    """Run an attack, mapping solver failure to ``None`` for callers that tally it."""
    try:
        return fn(*args, **kw)
    except NonConvergedError:
        return None
