import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from rdtool.bifurcation import (
    apriori_bounds,
    bif_summary,
    d_prime0,
    d_star,
    dstar_curve,
    dstar_limits,
    eigen_ratio,
    linear_matrix,
    mu1,
    nonexistence_threshold,
)
from rdtool.errors import AssumptionError
from rdtool.models import Coefficients, make_model

admissible = st.tuples(
    st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.floats(0.1, 2.0), st.floats(0.01, 20.0)
).filter(lambda t: t[0] + t[1] * t[2] > 0.05)


def test_nicholson_reference_values(nicholson):
    s = bif_summary(nicholson, 0.5, 1.0)
    assert abs(s.d_star - 0.1362) <= 5e-5
    assert s.M == pytest.approx(2 / (0.6 + math.sqrt(2.36)), abs=1e-12)
    assert s.M == pytest.approx(0.93623, abs=1e-5)
    assert s.direction == "supercritical"


def test_logistic_reference_values(logistic):
    for tau in (0.01, 0.5, 3.0, 40.0):
        s = bif_summary(logistic, tau, 1.0)
        assert s.d_star == 1.0
        assert s.sign_test < 0 and s.d_prime0 < 0
        # M for b = 0 is k / (1 + kappa tau)
        assert s.M == pytest.approx(1 / (1 + tau))


def test_eigen_ratio_uses_kappa():
    m = make_model("logistic", kappa=2.0, A=0.5, B=0.4)
    assert bif_summary(m, 0.5, 1.0).M == pytest.approx(1 / (2 * 0.5 + 1))


def test_thresholds(logistic, nicholson):
    assert nonexistence_threshold(logistic, 0.5, 1.0) == 1.0
    assert nonexistence_threshold(nicholson, 0.5, 1.0) == pytest.approx(0.1362, abs=5e-5)
    assert nonexistence_threshold(nicholson, 0.5, 1.0) == pytest.approx(bif_summary(nicholson, 0.5, 1.0).d_star)


def test_nicholson_bounds(nicholson):
    b = apriori_bounds(nicholson)
    assert b["u_max"] == pytest.approx(1 / (0.6 * 0.8 * math.e))
    assert b["u_max"] == pytest.approx(0.7664, abs=1e-4)
    assert b["v_max"] == pytest.approx(b["u_max"])


def test_logistic_bounds(logistic):
    b = apriori_bounds(logistic)
    assert b["u_star"] == 2.0 and b["H_star"] == 2.0


def test_variant_and_monod_bounds():
    b = apriori_bounds(make_model("nicholson_variant", chi=0.8, theta=1.0, nu=0.6))
    assert b["K5"] == pytest.approx(1 / (0.6 * math.e))
    assert b["H_3star"] == pytest.approx(1 / (0.6 * 0.8 * math.e))
    b = apriori_bounds(make_model("monod", chi=0.5, theta=2.0, A=1.0))
    assert b["K4_over_K1"] == pytest.approx(4.0)


def test_a3_violation_rejected():
    with pytest.raises(AssumptionError):
        mu1(-1.0, 0.5, 1.0, 1.0)
    with pytest.raises(AssumptionError):
        dstar_limits(-1.0, 1.0, 1.0, 1.0)


def test_empty_tau_grid():
    with pytest.raises(ValueError):
        dstar_curve(Coefficients(1, 1, 1, 0, 0, 0, 0), [], 1.0)


def test_limit_example():
    lo, hi = dstar_limits(1.0, 1.0, 1.0, 1.0)
    assert (lo, hi) == (2.0, 1.0)
    curve = dstar_curve(Coefficients(1, 1, 1, 0, 0, 0, 0), np.linspace(0.1, 10, 50), 1.0)
    assert np.all(np.diff(curve.values) < 0)
    assert np.all((curve.values > 1.0) & (curve.values < 2.0))


def test_nicholson_curve_decreases_to_zero(nicholson):
    curve = dstar_curve(nicholson, np.arange(1, 101) / 10, 1.0)
    assert np.all(np.diff(curve.values) < 0)
    assert curve.limit_inf == 0.0


@settings(max_examples=100, deadline=None)
@given(admissible)
def test_mu1_solves_quadratic(params):
    a, b, k, tau = params
    m = mu1(a, b, k, tau)
    assert m > 0
    resid = m * m - (a - 1 / tau) * m - (a + b * k) / tau
    scale = max(1.0, m * m, abs(a - 1 / tau) * m, abs(a + b * k) / tau)
    assert abs(resid) <= 1e-12 * scale


@settings(max_examples=100, deadline=None)
@given(admissible)
def test_eigenvector_of_linear_matrix(params):
    a, b, k, tau = params
    A = linear_matrix(a, b, k, tau)
    vec = np.array([1.0, eigen_ratio(a, b, k, tau)])
    resid = A @ vec - mu1(a, b, k, tau) * vec
    assert np.max(np.abs(resid)) <= 1e-12 * max(1.0, np.max(np.abs(A)))


@settings(max_examples=50, deadline=None)
@given(admissible, st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_d_prime0_sign_follows_sign_test(params, p, q, r, l):
    a, b, k, tau = params
    c = Coefficients(a, b, k, p, q, r, l)
    M = eigen_ratio(a, b, k, tau)
    assume(k + M * M * b * tau > 0)
    test = k * (p + 2 * q * M + r * M * M) + M * b * l
    assume(abs(test) > 1e-9)
    assert np.sign(d_prime0(c, tau, 1.0, 4 / 3, math.pi / 2)) == np.sign(test)


@pytest.mark.parametrize(
    "name, params",
    [
        ("logistic", {}),
        ("logistic_cubic", {"A": 1.0, "B": 0.4}),
        ("food_limited", {}),
        ("nicholson", {}),
        ("nicholson_variant", {}),
        ("monod", {"chi": 0.5, "theta": 2.0, "A": 1.0}),
    ],
)
def test_dstar_below_threshold(name, params):
    model = make_model(name, **params)
    for tau in (0.1, 0.5, 2.0):
        s = bif_summary(model, tau, 1.0)
        assert s.threshold is not None
        assert s.d_star <= s.threshold + 1e-12


def test_d_star_scales_with_lambda():
    assert d_star(1.0, 0.5, 1.0, 0.7, 2.0) == pytest.approx(d_star(1.0, 0.5, 1.0, 0.7, 1.0) / 2)


def test_summary_with_discrete_phi(grid_pi, pair_pi, logistic):
    s = bif_summary(logistic, 0.5, pair_pi.lam, pair_pi.phi, grid_pi.h)
    s0 = bif_summary(logistic, 0.5, 1.0)
    assert s.d_prime0 == pytest.approx(s0.d_prime0, rel=1e-3)
    assert s.normalization.startswith("max-norm")
