import numpy as np
import pytest
from hypothesis import given, strategies as st

from subspace_abstain.errors import ContractError
from subspace_abstain.piecewise import PiecewiseConstantFn as PCF


@st.composite
def step_fns(draw, lo=0.0, hi=10.0, max_breaks=8):
    # quantised breakpoints so that two functions often share breakpoints
    k = draw(st.integers(0, max_breaks))
    cuts = sorted(set(draw(st.lists(st.integers(0, 99), min_size=k, max_size=k))))
    b = [lo + (hi - lo) * c / 100 for c in cuts]
    vals = draw(st.lists(st.sampled_from([0.0, 0.25, 0.5, 1.0, -0.5]),
                         min_size=len(b) + 1, max_size=len(b) + 1))
    return PCF(lo, hi, b, vals)


taus = st.floats(0.0, 10.0, allow_nan=False)


def test_left_continuous_convention():
    f = PCF(0.0, 4.0, [1.0, 2.0], [5.0, 6.0, 7.0])
    assert f(0.0) == 5.0 and f(1.0) == 5.0 and f(np.nextafter(1.0, 2.0)) == 6.0
    assert f(2.0) == 6.0 and f(4.0) == 7.0


def test_from_thresholds_matches_indicators():
    f = PCF.from_thresholds(0.0, 5.0, at_most=[1.0, 3.0], above=[2.0], weight=0.5)
    for t in [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0]:
        expect = 0.5 * ((t <= 1.0) + (t <= 3.0) + (t > 2.0))
        assert f(t) == expect


def test_breakpoint_at_lo_is_point_value():
    f = PCF.from_thresholds(0.0, 1.0, above=[0.0])
    assert f(0.0) == 0.0 and f(1e-12) == 1.0


def test_rejects_bad_construction():
    with pytest.raises(ContractError):
        PCF(1.0, 1.0, [], [0.0])
    with pytest.raises(ContractError):
        PCF(0.0, 1.0, [0.5, 0.5], [0, 1, 2])
    with pytest.raises(ContractError):
        PCF(0.0, 1.0, [1.0], [0, 1])
    with pytest.raises(ContractError):
        PCF(0.0, 1.0, [0.5], [0.0])


def test_outside_domain_raises():
    with pytest.raises(ContractError):
        PCF.constant(0.0, 1.0)(1.5)


@given(step_fns(), step_fns(), taus)
def test_add_pointwise(f, g, t):
    assert (f + g)(t) == f(t) + g(t)


@given(step_fns(), step_fns(), taus)
def test_sub_and_scale_pointwise(f, g, t):
    assert (f - g)(t) == f(t) - g(t)
    assert (f * 3.0)(t) == 3.0 * f(t)
    assert (-f)(t) == -f(t)


@given(step_fns(), step_fns())
def test_merge_breakpoints_subset_of_union(f, g):
    s = f + g
    assert set(s.breakpoints) <= set(f.breakpoints) | set(g.breakpoints)


@given(step_fns())
def test_coalesce_no_equal_neighbours(f):
    c = f.coalesce()
    assert np.all(c.values[1:] != c.values[:-1])
    pts = f.probe_points()
    np.testing.assert_array_equal(c(pts), f(pts))


@given(step_fns(), taus)
def test_max_min_bound_values(f, t):
    assert f.min() <= f(t) <= f.max()
    assert f(f.argmax()) == f.max() and f(f.argmin()) == f.min()


@given(step_fns())
def test_max_attained_on_probes(f):
    pts = f.probe_points()
    assert np.max(f(pts)) == f.max()


@given(step_fns())
def test_integral_matches_riemann(f):
    x = np.linspace(0.0, 10.0, 200_001)
    mid = 0.5 * (x[1:] + x[:-1])
    assert f.integral() == pytest.approx(np.sum(f(mid)) * (x[1] - x[0]), abs=1e-3)


@given(step_fns(), st.floats(0.0, 4.9), st.floats(5.1, 10.0), taus)
def test_restrict(f, a, b, t):
    r = f.restrict(a, b)
    if a <= t <= b:
        assert r(t) == f(t)


@given(step_fns())
def test_dict_roundtrip(f):
    g = PCF.from_dict(f.to_dict())
    np.testing.assert_array_equal(g.breakpoints, f.breakpoints)
    np.testing.assert_array_equal(g.values, f.values)


@given(st.lists(st.floats(0.0, 9.0), max_size=10), st.lists(st.floats(0.0, 9.0), max_size=10))
def test_threshold_monotonicity(at_most, above):
    assert PCF.from_thresholds(0.0, 10.0, at_most=at_most).is_nonincreasing()
    assert PCF.from_thresholds(0.0, 10.0, above=above).is_nondecreasing()


def test_clip_and_map():
    f = PCF(0.0, 3.0, [1.0, 2.0], [-1.0, 0.5, 2.0])
    np.testing.assert_array_equal(f.clip(0.0, 1.0).values, [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(f.map(lambda v: v * 0.0).values, [0.0])
