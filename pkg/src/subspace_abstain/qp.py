"""Euclidean projection of a point onto a polyhedron {c : G c <= h}.

Small dense problems only (dimension and constraint count in the tens or
hundreds). The general path is the Goldfarb-Idnani dual active-set method
specialised to an identity Hessian: it starts from the unconstrained minimum,
adds the most violated constraint each step, drops constraints whose
multiplier would turn negative, and terminates finitely. When a violated
constraint cannot be satisfied, the active normals give a Farkas certificate
and the problem is reported infeasible. Dimension one uses interval
intersection instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergedError

DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class ProjectionResult:
    point: np.ndarray | None  # None when infeasible
    iterations: int
    active: tuple = ()
    multipliers: np.ndarray | None = None

    @property
    def feasible(self) -> bool:
        return self.point is not None


def _drop_degenerate_rows(G, h, tol):
    """Rows with a (numerically) zero normal are either vacuous or impossible."""
    norms = np.linalg.norm(G, axis=1)
    scale = max(1.0, float(np.max(norms))) if norms.size else 1.0
    zero = norms <= 1e-14 * scale
    if np.any(h[zero] < -tol):
        return None, None, norms
    keep = ~zero
    return G[keep], h[keep], norms[keep]


def _project_interval(t: float, g: np.ndarray, h: np.ndarray, tol: float):
    lo, hi = -np.inf, np.inf
    pos = g > 0
    neg = g < 0
    if pos.any():
        hi = float(np.min(h[pos] / g[pos]))
    if neg.any():
        lo = float(np.max(h[neg] / g[neg]))
    if lo > hi:
        # allow a sliver of width within tol (measured in constraint units)
        mid = 0.5 * (lo + hi)
        if np.all(g * mid - h <= tol):
            return np.array([mid])
        return None
    return np.array([min(max(t, lo), hi)])


def project_onto_polyhedron(target, G, h, tol: float = 1e-10,
                            max_iter: int = DEFAULT_MAX_ITER) -> ProjectionResult:
    """argmin ||c - target|| subject to G c <= h."""
    target = np.asarray(target, dtype=float).ravel()
    n = target.size
    G = np.asarray(G, dtype=float).reshape(-1, n)
    h = np.asarray(h, dtype=float).ravel()
    if G.shape[0] != h.size:
        raise ValueError("G and h disagree on the number of constraints")
    if tol <= 0:
        raise ValueError("tol must be positive")
    G, h, norms = _drop_degenerate_rows(G, h, tol)
    if G is None:
        return ProjectionResult(None, 0)
    if G.shape[0] == 0:
        return ProjectionResult(target.copy(), 0)
    if n == 1:
        p = _project_interval(float(target[0]), G[:, 0], h, tol)
        return ProjectionResult(p, 1)
    # work with unit normals so that tol is a distance
    Gn = G / norms[:, None]
    hn = h / norms

    x = target.copy()
    active: list[int] = []
    u = np.zeros(0)
    it = 0
    while True:
        viol = Gn @ x - hn
        if active:
            viol[active] = -np.inf
        p = int(np.argmax(viol))
        if viol[p] <= tol:
            mult = np.zeros(G.shape[0])
            mult[active] = u / norms[active]
            return ProjectionResult(x, it, tuple(sorted(active)), mult)
        # inner loop: bring constraint p to equality
        up = 0.0
        while True:
            it += 1
            if it > max_iter:
                raise NonConvergedError("active-set iteration cap reached", best=x.copy())
            a = Gn[p]
            if active:
                N = Gn[active].T  # (n, q)
                r, *_ = np.linalg.lstsq(N, a, rcond=None)
                z = a - N @ r
            else:
                r = np.zeros(0)
                z = a.copy()
            # multipliers move as u_active -= t r, u_p += t; blocked when they hit 0
            t1, block = np.inf, -1
            for j, rj in enumerate(r):
                if rj > 1e-14:
                    q = u[j] / rj
                    if q < t1:
                        t1, block = q, j
            zz = float(z @ z)
            s = float(a @ x - hn[p])
            t2 = s / zz if zz > 1e-24 else np.inf
            t = min(t1, t2)
            if not np.isfinite(t):
                # a = N r with r <= 0: no nonnegative combination can move x
                return ProjectionResult(None, it)
            x = x - t * z
            u = u - t * r
            up += t
            if t == t2:
                active.append(p)
                u = np.append(u, up)
                break
            del active[block]
            u = np.delete(u, block)
