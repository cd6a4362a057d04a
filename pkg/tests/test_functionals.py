import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from forchheimer.boundary import make_boundary
from forchheimer.constitutive import ForchheimerLaw, diffusivity
from forchheimer.errors import DomainError
from forchheimer.exponents import build_table
from forchheimer.functionals import (
    beta_tail,
    data_functional_A,
    data_functional_trace,
    data_functionals_G,
    double_bracket,
    envelope,
    grad_magnitude,
    h_integral,
    lambda_window,
    lebesgue_norm,
    space_integral,
    time_integral,
    time_weights,
)
from forchheimer.grid import Grid, ScalarField, Trajectory

LAW = ForchheimerLaw.parse("1+s")
TABLE = build_table(2, LAW, 2, 1.5)


def test_lebesgue_examples():
    g2 = Grid(2, 16)
    assert lebesgue_norm(ScalarField(g2, np.ones(g2.shape)), 2) == pytest.approx(1.0)
    g1 = Grid(1, 256)
    f = np.sin(np.pi * g1.axis)
    assert lebesgue_norm((g1, f), 2) == pytest.approx(math.sqrt(0.5), rel=1e-5)
    assert lebesgue_norm((g1, np.zeros(257)), 3) == 0.0
    assert lebesgue_norm((g1, f), math.inf) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        lebesgue_norm((g1, f), 0.5)


def test_quadrature_order():
    errs = []
    for cells in (16, 32, 64):
        g = Grid(2, cells)
        X, Y = g.mesh()
        f = np.broadcast_to(np.exp(X) * np.cos(Y), g.shape)
        errs.append(abs(float(space_integral(g, f)) - (math.e - 1) * math.sin(1)))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 1.7


@given(st.floats(0.01, 100), st.sampled_from([1.0, 2.0, 3.5, math.inf]))
def test_norm_homogeneity(lam, s):
    g = Grid(2, 16)
    X, Y = g.mesh()
    f = np.broadcast_to(np.sin(3 * X) + Y**2, g.shape)
    assert lebesgue_norm((g, lam * f), s) == pytest.approx(lam * lebesgue_norm((g, f), s), rel=1e-12)


def test_subdomain_monotone():
    g = Grid(2, 32)
    f = np.random.default_rng(1).normal(size=g.shape)
    assert lebesgue_norm((g, f), 2, g.box(0.25)) <= lebesgue_norm((g, f), 2, g.box(0.1)) <= lebesgue_norm((g, f), 2)


def test_trajectory_norm_window():
    g = Grid(1, 8)
    times = np.linspace(0, 2, 5)
    vals = np.ones((5, 9)) * times[:, None]
    tr = Trajectory(g, times, vals)
    # L^1 norm of t on [0, 2]; the interpolant is exact for linear data
    assert lebesgue_norm(tr, 1) == pytest.approx(2.0)
    assert lebesgue_norm(tr, math.inf, window=(0, 1)) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        lebesgue_norm(tr, 1, window=(1, 3))


@given(st.floats(0, 1), st.floats(0, 1), st.floats(-3, 3), st.floats(-3, 3))
def test_time_weights_exact_for_linear(u, v, c0, c1):
    times = np.array([0.0, 0.1, 0.35, 0.6, 1.0])
    t0, t1 = min(u, v), max(u, v)
    f = c0 + c1 * times
    exact = c0 * (t1 - t0) + 0.5 * c1 * (t1**2 - t0**2)
    assert float(time_weights(times, t0, t1) @ f) == pytest.approx(exact, abs=1e-12)


def test_h_integral_examples():
    g1 = Grid(1, 32)
    assert h_integral(ScalarField(g1, 2 * g1.axis), LAW) == pytest.approx(7 / 3, rel=1e-10)
    assert h_integral(ScalarField(g1, np.full(33, 4.0)), LAW) == 0.0


@given(st.floats(0.1, 10))
def test_h_integral_sandwich(c):
    g = Grid(2, 16)
    X, Y = g.mesh()
    f = ScalarField(g, np.broadcast_to(c * np.sin(2 * X) * Y, g.shape))
    xi = grad_magnitude(g, f.values)
    kx2 = float(space_integral(g, diffusivity(LAW, xi) * xi**2))
    H = h_integral(f, LAW)
    assert kx2 * (1 - 1e-9) <= H <= 2 * kx2 * (1 + 1e-9)


def test_A_examples():
    g = Grid(2, 16)
    assert data_functional_A(make_boundary("zero"), 2, 0.5, LAW, g) == 0.0
    assert data_functional_A(make_boundary("linear-drift", 1.0), 2, 0.5, LAW, g) == pytest.approx(1.0)
    assert data_functional_A(make_boundary("constant", 3.0), 2, 0.5, LAW, g) == 0.0


def test_G_examples():
    g = Grid(2, 16)
    assert data_functionals_G(make_boundary("zero"), 0.3, LAW, TABLE, g) == (0, 0, 0, 0)
    G = data_functionals_G(make_boundary("linear-drift", 1.0), 0.3, LAW, TABLE, g)
    assert G == pytest.approx((2, 1, 3, 3))


@given(st.sampled_from(["periodic", "product", "linear", "linear-drift"]), st.floats(0.1, 4), st.floats(0, 5))
def test_G_ordering(preset, amp, t):
    G1, G2, G3, G4 = data_functionals_G(make_boundary(preset, amp), t, LAW, TABLE, Grid(2, 8))
    assert G3 == G1 + G2 and G1 <= G3 <= G4


def test_envelope_examples():
    assert list(envelope([1, 3, 2])) == [1, 3, 3]
    assert list(envelope([1, 2, 2, 5])) == [1, 2, 2, 5]
    assert list(envelope([4, 4, 4])) == [4, 4, 4]


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
def test_envelope_invariants(xs):
    e = envelope(xs)
    assert np.all(np.diff(e) >= 0) and np.all(e >= np.array(xs))


def test_beta_tail_examples():
    t = np.linspace(0, 10, 1001)
    assert beta_tail(t, np.full(t.size, 2.0)) == pytest.approx(0.0, abs=1e-12)
    assert beta_tail(t, t**2) == pytest.approx(0.0, abs=1e-12)
    A = np.exp(-t)
    assert beta_tail(t, A, 2.5) == pytest.approx(math.exp(-7.5), rel=1e-3)
    assert beta_tail(t, A, 1.0) == pytest.approx(math.exp(-9.0), rel=1e-3)
    with pytest.raises(DomainError):
        beta_tail(t[:2], A[:2])


def test_trace_invariants():
    g = Grid(2, 8)
    tr = data_functional_trace(make_boundary("product", 2.0), g, np.linspace(0, 2, 21), LAW, TABLE)
    assert np.all(tr.EnvA >= tr.A) and np.all(np.diff(tr.EnvA) >= 0)
    assert tr.tail_window == pytest.approx(0.5)
    assert tr.tail_max("A") == pytest.approx(tr.A[15])
    assert len(list(tr.rows())) == 21


def _family(g, times, amp=1.0):
    X, Y = g.mesh()
    space = np.broadcast_to(np.sin(np.pi * X) * np.sin(np.pi * Y), g.shape)
    return amp * np.exp(-times)[:, None, None] * space


def test_double_bracket_examples():
    g = Grid(2, 16)
    times = np.linspace(0, 1, 5)
    assert double_bracket(g, times, np.zeros((5,) + g.shape), 2, 0.5) == 0.0
    assert double_bracket(g, times, np.ones((5,) + g.shape), 2, 0.5) == pytest.approx(1.0)
    u = _family(g, times)
    base = double_bracket(g, times, u, 2, 0.5)
    for lam in (0.1, 10.0):
        assert double_bracket(g, times, lam * u, 2, 0.5) == pytest.approx(lam * base, rel=1e-10)


def test_lambda_examples():
    g = Grid(2, 16)
    times = np.linspace(0, 1, 11)
    tr = Trajectory(g, times, np.full((11,) + g.shape, 3.0))
    V = g.box(0.125)
    vol = float(g.weights(V).sum())
    s0 = TABLE.s0
    lam = lambda_window(tr, 0.0, 1.0, 0.5, V, TABLE)
    assert lam == pytest.approx((vol * 0.75) ** ((2 - s0) / s0))
    assert lambda_window(tr, 0.0, 0.0, 0.5, V, TABLE) == 0.0
    with pytest.raises(DomainError):
        lambda_window(tr, 0.5, 1.0, 0.5, V, TABLE)


def test_lambda_refinement():
    vals = []
    for cells in (16, 32):
        g = Grid(2, cells)
        times = np.linspace(0, 1, 41)
        tr = Trajectory(g, times, _family(g, times, 3.0))
        vals.append(lambda_window(tr, 0.0, 1.0, 0.5, g.box(0.1), TABLE))
    assert 0.5 < vals[0] / vals[1] < 2.0
    assert time_integral(times, np.ones(41), 0, 1) == pytest.approx(1.0)
