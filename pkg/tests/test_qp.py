import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from subspace_abstain.attack import INFEASIBLE, Halfspace, solve_constrained_projection
from subspace_abstain.errors import NonConvergedError
from subspace_abstain.geometry import (Subspace, project_point_onto_affine_subspace,
                                       sample_uniform_subspace)
from subspace_abstain.qp import project_onto_polyhedron
from subspace_abstain.rng import make_rng


def _grid_oracle(target, G, h, half_width, zooms=25, n=201):
    """Feasible-grid minimum of |c - target|^2 with repeated local zoom (2-D)."""
    center = np.zeros(2)
    w = half_width
    best = None
    for _ in range(zooms):
        t = np.linspace(-w, w, n)
        a, b = np.meshgrid(center[0] + t, center[1] + t, indexing="ij")
        pts = np.stack([a.ravel(), b.ravel()], axis=1)
        ok = np.all(pts @ G.T <= h + 1e-15, axis=1)
        if not ok.any():
            break
        obj = np.sum((pts[ok] - target) ** 2, axis=1)
        k = int(np.argmin(obj))
        if best is None or obj[k] < best:
            best = obj[k]
        center = pts[ok][k]
        w = 25 * (t[1] - t[0])
    return best


def test_no_constraints_is_projection():
    S = sample_uniform_subspace(5, 2, 1)
    rng = make_rng(2)
    t, o = rng.standard_normal(5), rng.standard_normal(5)
    z = solve_constrained_projection(t, [], o, S)
    assert np.allclose(z, project_point_onto_affine_subspace(t, o, S)[0], atol=1e-14)


def test_line_interval_clamp():
    S = Subspace.span([1.0, 0.0])
    cons = [Halfspace([1.0, 0.0], 2.0), Halfspace([-1.0, 0.0], 1.0)]  # -1 <= z1 <= 2
    assert np.allclose(solve_constrained_projection([5.0, 3.0], cons, [0.0, 0.0], S), [2.0, 0.0])
    assert np.allclose(solve_constrained_projection([-7.0, 3.0], cons, [0.0, 0.0], S), [-1.0, 0.0])
    assert np.allclose(solve_constrained_projection([0.5, 3.0], cons, [0.0, 0.0], S), [0.5, 0.0])
    empty = [Halfspace([1.0, 0.0], -1.0), Halfspace([-1.0, 0.0], -1.0)]
    assert solve_constrained_projection([0.0, 0.0], empty, [0.0, 0.0], S) is INFEASIBLE


@pytest.mark.parametrize("seed", range(25))
def test_random_planar_instance_against_grid(seed):
    rng = make_rng(100, seed)
    S = sample_uniform_subspace(4, 2, seed)
    origin = rng.standard_normal(4)
    target = rng.standard_normal(4) * 3
    inner = origin + S.basis @ rng.standard_normal(2)  # keep the region nonempty
    cons = []
    for _ in range(5):
        a = rng.standard_normal(4)
        cons.append(Halfspace(a, float(a @ inner + rng.uniform(0.0, 1.0))))
    z = solve_constrained_projection(target, cons, origin, S, tol=1e-12)
    A = np.array([c.normal for c in cons])
    b = np.array([c.offset for c in cons])
    assert np.all(A @ z - b <= 1e-9)
    G = A @ S.basis
    h = b - A @ origin
    ct = S.basis.T @ (target - origin)
    c = S.basis.T @ (z - origin)
    ref = _grid_oracle(ct, G, h, half_width=np.linalg.norm(ct) + np.linalg.norm(S.basis.T @ (inner - origin)) + 2)
    tol = 1e-6 * (1.0 + ref)
    assert abs(np.sum((c - ct) ** 2) - ref) <= tol


@given(st.integers(0, 2**32), st.integers(2, 6), st.integers(1, 25))
def test_kkt_conditions(seed, n, k):
    rng = make_rng(seed)
    G = rng.standard_normal((k, n))
    h = rng.standard_normal(k)
    t = rng.standard_normal(n) * 3
    res = project_onto_polyhedron(t, G, h, tol=1e-12)
    # independent feasibility check by linear programming
    lp = linprog(np.zeros(n), A_ub=G, b_ub=h, bounds=[(None, None)] * n, method="highs")
    assert res.feasible == (lp.status == 0)
    if not res.feasible:
        return
    c = res.point
    assert np.all(G @ c - h <= 1e-9 * (1 + np.abs(h)))
    u = res.multipliers
    assert np.all(u >= -1e-12)
    # stationarity and complementary slackness
    assert np.allclose(c - t + G.T @ u, 0.0, atol=1e-8)
    assert np.all(np.abs(u * (G @ c - h)) <= 1e-8)


def test_iteration_cap_raises():
    rng = make_rng(3)
    G = rng.standard_normal((40, 6))
    h = -np.abs(rng.standard_normal(40))
    with pytest.raises(NonConvergedError) as e:
        project_onto_polyhedron(rng.standard_normal(6) * 10, G, h, max_iter=1)
    assert e.value.best is not None


def test_zero_normal_rows():
    assert project_onto_polyhedron([1.0, 1.0], [[0.0, 0.0]], [1.0]).feasible
    assert not project_onto_polyhedron([1.0, 1.0], [[0.0, 0.0]], [-1.0]).feasible
