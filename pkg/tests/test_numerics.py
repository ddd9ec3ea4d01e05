import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from onebitcs.errors import DomainError, EvaluationError
from onebitcs.numerics import (
    QuadratureRule,
    expect_1d,
    expect_2d,
    gauss_hermite_rule,
    gauss_pdf,
    gauss_tail,
    gauss_tail_inv,
    golden_section,
    kink_rule,
    phi_fun,
    soft_threshold,
    u_fun,
    u_prime,
    u_second,
)


def test_gauss_tail_examples():
    assert gauss_tail(0.0) == 0.5
    # H(40) ~ 4e-350 is below the smallest subnormal; it must flush quietly
    far = gauss_tail(40.0)
    assert 0.0 <= far < 1e-300
    assert 0.0 < gauss_tail(37.0) < 1e-290
    assert abs(gauss_tail(-0.8416) - 0.8) < 5e-4


def test_gauss_tail_rejects_nonfinite():
    for bad in (math.nan, math.inf, -math.inf):
        with pytest.raises(DomainError):
            gauss_tail(bad)


def test_gauss_tail_relative_accuracy_against_log_ndtr():
    # log_ndtr is an independent evaluation route in scipy
    x = np.linspace(-8, 8, 1601)
    ref = np.exp(special.log_ndtr(-x))
    rel = np.abs(gauss_tail(x) - ref) / ref
    assert rel.max() < 1e-12


def test_gauss_tail_symmetry_and_monotone():
    x = np.linspace(-10, 10, 2001)
    h = gauss_tail(x)
    assert np.max(np.abs(h + gauss_tail(-x) - 1.0)) < 1e-14
    assert np.all(np.diff(h) <= 0)
    # strictly decreasing wherever H is not rounded to 1
    assert np.all(np.diff(h[x >= -7]) < 0)


def test_gauss_tail_inv_examples():
    assert gauss_tail_inv(0.5) == pytest.approx(0.0, abs=1e-15)
    assert abs(gauss_tail(gauss_tail_inv(0.8)) - 0.8) < 1e-10
    assert abs(gauss_tail_inv(0.8) + 0.8416) < 1e-3
    for bad in (0.0, 1.0, -0.1, 1.5, math.nan):
        with pytest.raises(DomainError):
            gauss_tail_inv(bad)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-12, max_value=1 - 1e-12))
def test_gauss_tail_inv_roundtrip(p):
    assert abs(gauss_tail(gauss_tail_inv(p)) - p) <= 1e-10 * max(p, 1e-3)


def test_rule_invariants():
    rule = gauss_hermite_rule(101)
    assert rule.order == 101
    assert abs(rule.weights.sum() - 1.0) < 1e-12
    assert np.all(np.diff(rule.nodes) > 0)
    assert np.all(rule.weights > 0)
    with pytest.raises(DomainError):
        gauss_hermite_rule(1)
    with pytest.raises(DomainError):
        QuadratureRule(nodes=np.array([1.0, 0.0]), weights=np.array([0.5, 0.5]), order=2)
    with pytest.raises(DomainError):
        QuadratureRule(nodes=np.array([0.0, 1.0]), weights=np.array([1.5, -0.5]), order=2)


def test_expect_1d_examples():
    assert abs(expect_1d(lambda t: np.ones_like(t)) - 1.0) < 1e-12
    assert abs(expect_1d(lambda t: t * t) - 1.0) < 1e-10
    assert abs(expect_1d(u_fun) - 0.5) < 1e-8


def test_expect_1d_scalar_callable():
    assert abs(expect_1d(lambda t: math.cos(t)) - math.exp(-0.5)) < 1e-12


def test_expect_1d_reports_bad_node():
    with pytest.raises(EvaluationError) as info:
        expect_1d(lambda t: np.where(t > 3.0, np.nan, 1.0))
    assert info.value.node > 3.0


def test_expect_2d_examples():
    assert abs(expect_2d(lambda t, r: np.ones_like(t)) - 1.0) < 1e-12
    assert abs(expect_2d(lambda t, r: t * r)) < 1e-10
    assert abs(expect_2d(lambda t, r: (t + r) ** 2) - 2.0) < 1e-9
    with pytest.raises(EvaluationError):
        expect_2d(lambda t, r: np.where(r < -5, np.inf, t))


def test_kink_rule_half_moments():
    rule = kink_rule([0.0])
    assert abs(rule.weights.sum() - 1.0) < 1e-12
    assert np.all(np.diff(rule.nodes) > 0)
    assert abs(expect_1d(u_fun, rule) - 0.5) < 1e-13
    # E[|t - c|] against its closed form
    c = 0.37
    exact = 2 * gauss_pdf(c) + c * (1 - 2 * gauss_tail(c))
    assert abs(expect_1d(lambda t: np.abs(t - c), kink_rule([c])) - exact) < 1e-13


def test_expect_2d_inner_rule_follows_kink_line():
    f = lambda t, r: np.maximum(t + 0.5 * r, 0.0)  # noqa: E731
    got = expect_2d(f, gauss_hermite_rule(41), inner=lambda r: kink_rule([-0.5 * r]))
    # t + r/2 ~ N(0, 5/4); E[max(Z, 0)] = sd / sqrt(2 pi)
    assert abs(got - math.sqrt(1.25) / math.sqrt(2 * math.pi)) < 1e-12


def test_u_kernels():
    assert u_fun(2.0) == 4.0 and u_prime(2.0) == 4.0 and u_second(2.0) == 2.0
    assert u_fun(-3.0) == 0.0
    assert u_fun(0.0) == 0.0 and u_prime(0.0) == 0.0 and u_second(0.0) == 0.0
    eps = 1e-6
    fd = (u_fun(1.5 + eps) - u_fun(1.5 - eps)) / (2 * eps)
    assert abs(u_prime(1.5) - fd) < 1e-6
    with pytest.raises(DomainError):
        u_fun(math.inf)


@pytest.mark.parametrize("x", [-2.0, -0.1, 0.1, 0.7, 3.0])
def test_u_second_is_second_derivative(x):
    eps = 1e-4
    fd = (u_fun(x + eps) - 2 * u_fun(x) + u_fun(x - eps)) / eps ** 2
    assert abs(u_second(x) - fd) < 1e-6


def test_phi_fun_examples():
    assert phi_fun(0.5, 1.0) == 0.0
    assert phi_fun(2.0, 1.0) == -0.5
    assert phi_fun(-3.0, 2.0) == -1.0
    xs = np.linspace(-5, 5, 2_000_001)
    brute = np.min(0.5 * 2.0 * xs ** 2 + 3.0 * xs + np.abs(xs))
    assert abs(phi_fun(-3.0, 2.0) - brute) < 1e-6
    with pytest.raises(DomainError):
        phi_fun(1.0, 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-20, 20), st.floats(0.05, 20))
def test_phi_fun_nonpositive_and_minimised_by_soft_threshold(h, Q_hat):
    val = phi_fun(h, Q_hat)
    assert val <= 0.0
    x = soft_threshold(h, Q_hat)
    assert abs(0.5 * Q_hat * x * x - h * x + abs(x) - val) < 1e-9 * max(1.0, abs(val))


def test_phi_fun_smooth_at_one():
    eps = 1e-7
    for sgn in (1.0, -1.0):
        assert phi_fun(sgn, 1.3) == 0.0
        assert abs((phi_fun(sgn * (1 + eps), 1.3) - phi_fun(sgn * (1 - eps), 1.3)) / (2 * eps)) < 1e-6


def test_golden_section_interior_and_boundary():
    x, fx = golden_section(lambda v: (v - 0.3) ** 2, 0.0, 1.0, width=1e-6)
    assert abs(x - 0.3) < 1e-6
    x, _ = golden_section(lambda v: v, 0.0, 1.0)
    assert x == 0.0


def test_expect_1d_matches_quad_on_smooth_integrands():
    for f in (np.cos, lambda t: np.exp(0.3 * t), lambda t: gauss_tail(0.4 * t + 0.1)):
        ref, _ = integrate.quad(lambda t: f(t) * gauss_pdf(t), -np.inf, np.inf, epsabs=1e-14)
        assert abs(expect_1d(f) - ref) < 1e-9
