import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdtool.bifurcation import apriori_bounds, bif_summary
from rdtool.errors import ConvergenceError, NegativeSolutionError
from rdtool.models import make_model
from rdtool.spectral import Grid1D, build_laplacian, principal_eigenpair
from rdtool.steady import (
    FieldState,
    SteadySystem,
    continue_amplitude,
    continue_branch,
    linearized_spectrum,
    newton_solve,
    uniqueness_probe,
)

MODEL_CASES = [
    ("logistic", {}),
    ("logistic_cubic", {"A": 1.0, "B": 0.4}),
    ("food_limited", {}),
    ("nicholson", {}),
    ("nicholson_variant", {}),
    ("monod", {"chi": 0.5, "theta": 2.0, "A": 1.0}),
]


@pytest.fixture(scope="module")
def grid():
    return Grid1D(math.pi, 48)


@pytest.fixture(scope="module")
def logistic_branch(logistic, grid):
    return continue_branch(logistic, 0.5, grid, 0.99, 0.05, 40)


def test_zero_is_fixed(logistic, grid):
    st0 = newton_solve(logistic, 0.7, 0.5, grid, FieldState.zeros(grid.n_interior))
    assert np.all(st0.stack() == 0.0)
    sys = SteadySystem(logistic, 0.7, 0.5, grid)
    assert np.all(sys.residual(np.zeros(2 * grid.n_interior)) == 0.0)


def test_logistic_positive_state(logistic, grid):
    guess = FieldState(0.5 * np.sin(grid.x), 0.5 * np.sin(grid.x))
    st = newton_solve(logistic, 0.5, 0.5, grid, guess)
    assert np.max(st.u) <= 2.0
    assert np.min(st.u) > 0
    assert np.max(np.abs(SteadySystem(logistic, 0.5, 0.5, grid).residual(st.stack()))) <= 1e-10


def test_no_positive_state_above_threshold(logistic, grid):
    for amp in np.linspace(0.1, 2.0, 8):
        guess = FieldState(amp * np.sin(grid.x), amp * np.sin(grid.x))
        try:
            st = newton_solve(logistic, 1.05, 0.5, grid, guess)
        except (ConvergenceError, NegativeSolutionError):
            continue
        assert np.max(np.abs(st.u)) < 1e-8


def test_newton_rejects_bad_guess(logistic, grid):
    with pytest.raises(ValueError):
        newton_solve(logistic, 0.5, 0.5, grid, FieldState(np.full(48, np.nan), np.zeros(48)))


@pytest.mark.parametrize("strong", [False, True])
@pytest.mark.parametrize("name, params", MODEL_CASES)
def test_jacobian_matches_finite_differences(name, params, strong, grid):
    model = make_model(name, **params)
    sys = SteadySystem(model, 0.3, 0.7, grid, strong=strong)
    rng = np.random.default_rng(11)
    x = rng.uniform(0.05, 1.5, sys.n_fields * grid.n_interior)
    J = sys.jacobian(x).toarray()
    h = 1e-6
    fd = np.empty_like(J)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        fd[:, j] = (sys.residual(x + e) - sys.residual(x - e)) / (2 * h)
    assert np.max(np.abs(J - fd)) <= 1e-5 * np.max(np.abs(J))


def test_d_derivative(logistic, grid):
    x = np.random.default_rng(2).uniform(0, 1, 2 * grid.n_interior)
    h = 1e-6
    fd = (SteadySystem(logistic, 0.5 + h, 0.5, grid).residual(x) - SteadySystem(logistic, 0.5 - h, 0.5, grid).residual(x)) / (2 * h)
    assert np.allclose(SteadySystem(logistic, 0.5, 0.5, grid).d_derivative(x), fd, atol=1e-6)


def test_branch_shape(logistic_branch):
    d = np.array([p.d for p in logistic_branch])
    amp = np.array([p.amplitude for p in logistic_branch])
    assert np.all(np.diff(d) < 0)
    assert np.all(np.diff(amp) > 0)
    assert np.all(amp <= 2.0)
    assert all(p.residual <= 1e-10 for p in logistic_branch)


def test_branch_nondegenerate(logistic_branch):
    svs = [p.min_sv for p in logistic_branch if p.d <= 0.95]
    assert min(svs) > 1e-3


def test_branch_slope_near_dstar(logistic, grid):
    pair = principal_eigenpair(grid)
    s = bif_summary(logistic, 0.5, pair.lam, pair.phi, grid.h)
    pts = continue_branch(logistic, 0.5, grid, 0.998 * s.d_star, 0.97 * s.d_star, 6)[-5:]
    gap = np.array([s.d_star - p.d for p in pts])
    amp = np.array([p.amplitude for p in pts])
    slope = np.polyfit(gap, amp, 1)[0]
    assert slope == pytest.approx(1 / abs(s.d_prime0), rel=0.25)


def test_trivial_state_stability(logistic, nicholson, grid):
    pair = principal_eigenpair(grid)
    zero = FieldState.zeros(grid.n_interior)
    for model in (logistic, nicholson):
        ds = bif_summary(model, 0.5, pair.lam).d_star
        assert linearized_spectrum(model, 1.05 * ds, 0.5, grid, zero).stable
        assert linearized_spectrum(model, 0.95 * ds, 0.5, grid, zero).leading_eig > 0


def test_bifurcating_state_is_stable(logistic_branch):
    assert logistic_branch[0].leading_eig < 0


def test_branch_respects_bounds(logistic, nicholson, grid, logistic_branch):
    nic = continue_branch(nicholson, 0.5, grid, 0.135, 0.01, 30)
    for model, pts in ((logistic, logistic_branch), (nicholson, nic)):
        b = apriori_bounds(model)
        for p in pts:
            assert np.max(p.state.u) <= b["u_max"] + 1e-8
            assert np.max(p.state.v) <= b["v_max"] + 1e-8


def test_uniqueness_examples(logistic, grid):
    assert uniqueness_probe(logistic, 0.5, 0.5, grid, 20, seed=3).verdict == "unique"
    assert uniqueness_probe(logistic, 1.05, 0.5, grid, 20, seed=3).verdict == "none"


def test_probe_is_deterministic(logistic, grid):
    a = uniqueness_probe(logistic, 0.3, 0.5, grid, 8, seed=5)
    b = uniqueness_probe(logistic, 0.3, 0.5, grid, 8, seed=5)
    assert a.n_trivial == b.n_trivial
    assert all(np.array_equal(x.u, y.u) for x, y in zip(a.solutions, b.solutions))


def test_probe_warns_without_uniqueness_structure(nicholson, grid):
    with pytest.warns(UserWarning):
        uniqueness_probe(nicholson, 0.1, 0.5, grid, 2, seed=0)


def test_strong_steady_state_relations(nicholson, grid):
    # at equilibrium w = R H(u) and v = R w with R = (1 + tau d L)^{-1}
    d, tau = 0.1, 0.5
    pair = principal_eigenpair(grid)
    guess = FieldState(0.1 * pair.phi, 0.1 * pair.phi, 0.1 * pair.phi)
    st = newton_solve(nicholson, d, tau, grid, guess)
    R = np.linalg.inv(np.eye(grid.n_interior) + tau * d * build_laplacian(grid).to_dense())
    assert np.allclose(st.w, R @ nicholson.H(st.u), atol=1e-9)
    assert np.allclose(st.v, R @ st.w, atol=1e-9)
    weak = newton_solve(nicholson, d, tau, grid, FieldState(st.u, st.v))
    assert weak.distance(FieldState(st.u, st.v)) > 1e-4


def _branch_regime(A, B):
    g = Grid1D(math.pi, 40)
    model = make_model("logistic_cubic", kappa=1.0, A=A, B=B, C=1.0)
    pair = principal_eigenpair(g)
    s = bif_summary(model, 0.5, pair.lam, pair.phi, g.h)
    pts = continue_amplitude(model, 0.5, g, np.linspace(0.01, 0.6, 25))
    return model, s, pts, g


@pytest.mark.parametrize("A, B", [(0.1, 2.0), (1.0, 0.4), (2.0, 0.4), (0.3, 1.5)])
def test_cubic_branch_direction_follows_d_prime0(A, B):
    # subcritical exactly when B M < A, as the d'(0) formula predicts
    model, s, pts, _ = _branch_regime(A, B)
    first = pts[0]
    assert np.sign(first.d - s.d_star) == np.sign(s.d_prime0)
    assert (s.d_prime0 > 0) == (B * s.M < A)


def test_cubic_subcritical_has_two_solutions():
    model, s, pts, g = _branch_regime(1.0, 0.4)
    d_probe = 1.001 * s.d_star
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = uniqueness_probe(model, d_probe, 0.5, g, 20, seed=1)
    assert len(res.solutions) >= 2


@settings(max_examples=10, deadline=None)
@given(kappa=st.floats(0.5, 2.0), A=st.floats(0.2, 1.0), B=st.floats(0.1, 1.0))
def test_exchange_of_stability_logistic_family(kappa, A, B):
    g = Grid1D(math.pi, 32)
    model = make_model("logistic", kappa=kappa, A=A, B=B)
    pair = principal_eigenpair(g)
    s = bif_summary(model, 0.5, pair.lam, pair.phi, g.h)
    pts = continue_branch(model, 0.5, g, 0.995 * s.d_star, 0.97 * s.d_star, 3)
    assert all(np.sign(p.leading_eig) == np.sign(s.sign_test) for p in pts)
