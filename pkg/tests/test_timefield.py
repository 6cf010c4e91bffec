"""Exponential-in-time series algebra and the space-time mollifier."""

import math

import numpy as np
from hypothesis import given, settings, strategies as st

from torusns.spectral import Grid, SpectralField
from torusns.timefield import ExpSeries, mollify_time, time_kernel_factor

GRID = Grid(64)


def mode(a, k=(1, 0)):
    return SpectralField.from_modes(GRID, {k: a, (-k[0], -k[1]): np.conj(a)})


def test_at_matches_closed_form():
    s = ExpSeries({2.0: mode(1.0), 5.0: mode(0.5)})
    t = 0.3
    got = s.at(t)
    expect = math.exp(-2.0 * t) * mode(1.0) + math.exp(-5.0 * t) * mode(0.5)
    assert (got - expect).sup_norm() <= 1e-14


def test_dt_is_exact_derivative():
    s = ExpSeries({3.0: mode(1.0)})
    t = 0.1
    h = 1e-6
    fd = (1.0 / (2 * h)) * (s.at(t + h) - s.at(t - h))
    exact = s.dt().at(t)
    assert (fd - exact).sup_norm() <= 1e-7 * max(exact.sup_norm(), 1.0)


def test_combine_adds_rates():
    a = ExpSeries({1.0: mode(1.0)})
    b = ExpSeries({2.0: mode(1.0)})
    c = a.combine(b, lambda f, g: f.product(g))
    assert list(c.terms) == [3.0]


def test_scale_rates_shifts_all_rates():
    s = ExpSeries({1.0: mode(1.0), 4.0: mode(2.0)})
    shifted = s.scale_rates(10.0)
    assert sorted(shifted.terms) == [11.0, 14.0]
    t = 0.05
    ref = math.exp(-10.0 * t) * s.at(t)
    assert (shifted.at(t) - ref).sup_norm() <= 1e-13


def test_mixed_grid_accumulation():
    big = SpectralField.from_modes(Grid(128), {(1, 0): 1.0, (-1, 0): 1.0})
    s = ExpSeries({1.0: mode(1.0)}) + ExpSeries({1.0: big})
    out = s.at(0.0)
    assert out.grid.n == 128
    expect = mode(1.0).regrid(Grid(128)) + big
    assert (out - expect).sup_norm() <= 1e-14


def test_time_kernel_factor_near_one_for_slow_rates():
    # int of the unit-mass forward bump against e^{-r(s-t)}: for r l << 1
    # the factor is within r l of 1
    ell = 1e-4
    for r in (0.0, 1.0, 100.0):
        f = time_kernel_factor(r, ell)
        assert abs(f - 1.0) <= r * ell + 1e-12


def test_mollify_time_preserves_rates_and_reality():
    s = ExpSeries({0.0: mode(1.0), 625.0: mode(0.5)})
    m = mollify_time(s, 1e-4)
    assert sorted(m.terms) == [0.0, 625.0]
    for f in m.terms.values():
        assert f.is_real()


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 50.0), st.floats(0.0, 50.0), st.floats(0.0, 0.1))
def test_series_addition_linear_in_time(r1, r2, t):
    s1 = ExpSeries({r1: mode(1.0)})
    s2 = ExpSeries({r2: mode(0.5)})
    lhs = (s1 + s2).at(t)
    rhs = s1.at(t) + s2.at(t)
    assert (lhs - rhs).sup_norm() <= 1e-12
