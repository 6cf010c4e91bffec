"""Core transform layer: exactness of derivatives, products, projections."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torusns.spectral import (Grid, MatrixField, SpectralField, VectorField,
                              calderon_lift, fit_grid, leray_project)

GRID = Grid(64)


def random_field(rng, grid=GRID, band=10, real=True):
    modes = {}
    for _ in range(8):
        k1 = int(rng.integers(-band, band + 1))
        k2 = int(rng.integers(-band, band + 1))
        c = complex(rng.standard_normal(), rng.standard_normal())
        modes[(k1, k2)] = modes.get((k1, k2), 0) + c
        if real:
            modes[(-k1, -k2)] = modes.get((-k1, -k2), 0) + np.conj(c)
    return SpectralField.from_modes(grid, modes)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def test_single_mode_derivative_exact():
    f = SpectralField.from_modes(GRID, {(3, -2): 1.0, (-3, 2): 1.0})
    d = f.dx(0)
    expect = SpectralField.from_modes(GRID, {(3, -2): 3j, (-3, 2): -3j})
    assert np.abs(d.coef - expect.coef).max() == 0.0


def test_gradient_of_product_leibniz(rng):
    f = random_field(rng)
    g = random_field(rng)
    lhs = f.product(g).gradient()
    rhs_1 = f.dx(0).product(g) + f.product(g.dx(0))
    rhs_2 = f.dx(1).product(g) + f.product(g.dx(1))
    scale = max(lhs.u1.sup_norm(), 1.0)
    assert (lhs.u1 - rhs_1).sup_norm() <= 1e-12 * scale
    assert (lhs.u2 - rhs_2).sup_norm() <= 1e-12 * scale


def test_product_matches_physical_multiplication(rng):
    f = random_field(rng, band=10)
    g = random_field(rng, band=10)
    prod = f.product(g)
    # oracle: multiply on a grid large enough that no aliasing occurs
    big = Grid(256)
    pf = f.regrid(big).to_physical()
    pg = g.regrid(big).to_physical()
    oracle = np.fft.fft2(pf * pg) / big.n ** 2
    got = prod.regrid(big).coef
    assert np.abs(got - oracle).max() <= 1e-12 * max(np.abs(oracle).max(), 1)


def test_product_unpadded_equals_padded(rng):
    # band sum below the alias-free threshold: both paths must agree
    f = random_field(rng, band=5)
    g = random_field(rng, band=5)
    small = f.regrid(Grid(32)).product(g.regrid(Grid(32)))
    large = f.product(g)
    assert (small.regrid(GRID) - large).sup_norm() <= 1e-12


def test_laplacian_heat_consistency(rng):
    f = random_field(rng)
    t = 1e-3
    heated = f.heat(t)
    # d/dt e^{t Delta} f = Delta e^{t Delta} f via a centred difference
    dt = 1e-6
    fd = (1.0 / (2 * dt)) * (f.heat(t + dt) - f.heat(t - dt))
    lap = heated.laplacian()
    assert (fd - lap).sup_norm() <= 1e-4 * max(lap.sup_norm(), 1.0)


def test_heat_semigroup(rng):
    f = random_field(rng)
    a = f.heat(1e-3).heat(2e-3)
    b = f.heat(3e-3)
    assert (a - b).sup_norm() <= 1e-13 * max(b.sup_norm(), 1.0)


def test_inverse_laplacian_roundtrip(rng):
    # inv_laplacian is (-Delta)^{-1}
    f = random_field(rng)
    f = f - SpectralField.from_modes(GRID, {(0, 0): f.mean()})
    back = (-1.0) * f.inv_laplacian().laplacian()
    assert (back - f).sup_norm() <= 1e-11 * max(f.sup_norm(), 1.0)


def test_shift_is_modulation(rng):
    f = random_field(rng, band=8)
    shifted = f.shift(5, -3)
    big = Grid(256)
    x = big.points()
    oracle = f.regrid(big).to_physical() * np.exp(1j * (5 * x[0] - 3 * x[1]))
    got = shifted.regrid(big).to_physical()
    assert np.abs(got - oracle).max() <= 1e-12 * max(np.abs(oracle).max(), 1)


def test_regrid_roundtrip_exact(rng):
    f = random_field(rng, band=10)
    back = f.regrid(Grid(256)).regrid(GRID)
    assert np.abs(back.coef - f.coef).max() == 0.0


def test_fit_grid_preserves_field(rng):
    f = random_field(rng, band=10).regrid(Grid(512))
    small = fit_grid(f)
    assert small.grid.n < 512
    assert (small.regrid(Grid(512)) - f).sup_norm() <= 1e-13


def test_is_real_detects_hermitian(rng):
    f = random_field(rng, real=True)
    assert f.is_real()
    g = SpectralField.from_modes(GRID, {(1, 0): 1.0})
    assert not g.is_real()


def test_sup_norm_oversampling():
    # a pure mode's sup norm is its coefficient mass
    f = SpectralField.from_modes(GRID, {(7, 0): 0.5, (-7, 0): 0.5})
    assert abs(f.sup_norm() - 1.0) <= 1e-12


def test_l2_norm_parseval(rng):
    f = random_field(rng)
    amp = np.sqrt(np.sum(np.abs(f.coef) ** 2) * (2 * np.pi) ** 2)
    assert abs(f.l2_norm() - amp) <= 1e-10 * amp


def test_leray_removes_divergence(rng):
    v = VectorField(random_field(rng), random_field(rng))
    p = leray_project(v)
    assert p.divergence().sup_norm() <= 1e-11 * max(p.sup_norm(), 1.0)
    # idempotent
    assert (leray_project(p) - p).sup_norm() <= 1e-12 * max(p.sup_norm(), 1)


def test_leray_keeps_solenoidal(rng):
    w = random_field(rng).perp_gradient()
    assert (leray_project(w) - w).sup_norm() <= 1e-12 * max(w.sup_norm(), 1)


def test_calderon_lift_divergence_identity(rng):
    for _ in range(100):
        w = random_field(rng).perp_gradient()
        r = calderon_lift(w)
        resid = (r.row_divergence() - w).sup_norm()
        assert resid <= 1e-12 * max(w.sup_norm(), 1.0)


def test_calderon_lift_shear_closed_form():
    # w = lam sin(lam x1) e2 lifts to the symbolic closed form with
    # off-diagonal entries -cos(lam x1) / 1 and zero diagonal
    lam = 8
    w2 = SpectralField.from_modes(GRID, {(lam, 0): -0.5j * lam,
                                         (-lam, 0): 0.5j * lam})
    w = VectorField(SpectralField.zero(GRID), w2)
    r = calderon_lift(w)
    cos = SpectralField.from_modes(GRID, {(lam, 0): -0.5, (-lam, 0): -0.5})
    assert (r.a11).sup_norm() <= 1e-13
    assert (r.a22).sup_norm() <= 1e-13
    assert (r.a12 - cos).sup_norm() <= 1e-13
    assert (r.a21 - cos).sup_norm() <= 1e-13


def test_calderon_lift_rejects_divergent(rng):
    v = VectorField(random_field(rng), random_field(rng))
    with pytest.raises(ValueError):
        calderon_lift(v)


def test_matrix_row_divergence_transpose(rng):
    a = random_field(rng)
    m = MatrixField(a, a.dx(0), a.dx(1), a)
    d = m.row_divergence()
    expect1 = a.dx(0) + a.dx(0).dx(1)
    expect2 = a.dx(1).dx(0) + a.dx(1)
    assert (d.u1 - expect1).sup_norm() <= 1e-11 * max(expect1.sup_norm(), 1)
    assert (d.u2 - expect2).sup_norm() <= 1e-11 * max(expect2.sup_norm(), 1)


@settings(max_examples=25, deadline=None)
@given(k1=st.integers(-20, 20), k2=st.integers(-20, 20),
       t=st.floats(0.0, 1.0))
def test_heat_multiplier_property(k1, k2, t):
    f = SpectralField.from_modes(GRID, {(k1, k2): 1.0})
    h = f.heat(t)
    expect = np.exp(-(k1 * k1 + k2 * k2) * t)
    got = h.coef[k1 % 64, k2 % 64]
    assert abs(got - expect) <= 1e-13


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 30))
def test_perp_gradient_is_solenoidal(seed):
    rng = np.random.default_rng(seed)
    w = random_field(rng).perp_gradient()
    assert w.divergence().sup_norm() <= 1e-11 * max(w.sup_norm(), 1.0)
