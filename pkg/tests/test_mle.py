from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from algfam.ideal import Ideal
from algfam.models import CIStatement, DiscreteDomain, GaussianDomain, discrete_ci_ideal, gaussian_ci_ideal
from algfam.mle import (
    ConvergenceError,
    NotPositiveDefiniteError,
    _fa_model,
    boundary_mle,
    classify_critical,
    empirical_stats,
    fa_concentration,
    fa_critical_system,
    fa_hessian,
    gaussian_loglik,
    lagrange_system,
    lr_stat_ci,
    solve_lagrange,
)
from oracles import central_gradient, lr_two_branch_numeric, random_pd
from conftest import S2


# -- sample statistics, log-likelihood ------------------------------------------

def test_empirical_stats_examples():
    st_ = empirical_stats([[1, 2, 3], [1, 2, 3]])
    assert np.all(st_.S == 0)
    st_ = empirical_stats([[1, 0], [0, 1]])
    np.testing.assert_allclose(st_.mean, [0.5, 0.5])
    np.testing.assert_allclose(st_.S, [[0.25, -0.25], [-0.25, 0.25]])
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 3))
    a, b = empirical_stats(X), empirical_stats(X[rng.permutation(20)])
    np.testing.assert_allclose(a.S, b.S, atol=1e-14)
    with pytest.raises(ValueError):
        empirical_stats([[1, 2]])


def test_loglik_examples():
    assert gaussian_loglik(np.eye(2), np.eye(2), 1) == pytest.approx(-1.0, abs=1e-15)
    S = np.array([[2.0, 0.5], [0.5, 1.0]])
    K = np.linalg.inv(S)
    best = gaussian_loglik(K, S, 3)
    assert best == pytest.approx(1.5 * (-np.log(np.linalg.det(S)) - 2))
    rng = np.random.default_rng(1)
    for _ in range(20):
        K2 = K + 0.1 * (lambda A: A + A.T)(rng.normal(size=(2, 2)))
        if np.all(np.linalg.eigvalsh(K2) > 0):
            assert gaussian_loglik(K2, S, 3) <= best
    assert gaussian_loglik(K, S, 6) == pytest.approx(2 * gaussian_loglik(K, S, 3))


def test_loglik_rejects_non_pd():
    with pytest.raises(NotPositiveDefiniteError):
        gaussian_loglik(np.diag([1.0, -1.0]), np.eye(2))
    with pytest.raises(NotPositiveDefiniteError):
        gaussian_loglik(np.diag([1.0, 1e-12]), np.eye(2))


# -- LR statistic ---------------------------------------------------------------

def test_lr_examples():
    assert lr_stat_ci(np.diag([1.0, 2.0, 3.0])).value == pytest.approx(0, abs=1e-15)
    S = np.array([[2.0, 0, 0], [0, 3.0, 1.0], [0, 1.0, 2.0]])
    r = lr_stat_ci(S)
    assert r.value == pytest.approx(0, abs=1e-12) and r.branch == "A13"
    r = lr_stat_ci([[2, 1, 0], [1, 2, 0], [0, 0, 1]])
    assert r.value == pytest.approx(np.log(4 / 3), abs=1e-14)
    with pytest.raises(NotPositiveDefiniteError):
        lr_stat_ci(np.ones((3, 3)))


def test_lr_zero_on_a23():
    S = np.array([[2.0, 0, 0.7], [0, 3.0, 0], [0.7, 0, 2.0]])
    r = lr_stat_ci(S)
    assert r.value == pytest.approx(0, abs=1e-12) and r.branch == "A23"


def test_lr_matches_numeric_oracle():
    rng = np.random.default_rng(11)
    for _ in range(25):
        S = random_pd(rng, 3)
        assert abs(lr_stat_ci(S).value - lr_two_branch_numeric(S)) < 1e-8


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=9, max_size=9), st.floats(0.1, 3))
def test_lr_nonnegative(entries, jitter):
    A = np.array(entries).reshape(3, 3)
    S = A @ A.T + jitter * np.eye(3)
    assert lr_stat_ci(S).value >= -1e-12


# -- factor analysis: symbolic system, derivatives --------------------------------

def _feasible_theta(rng, p=4):
    while True:
        w = rng.uniform(0.5, 3.0, p)
        l = rng.normal(size=p) * 0.5
        if np.all(np.linalg.eigvalsh(fa_concentration(np.concatenate([w, l]))) > 0.05):
            return np.concatenate([w, l])


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    model = _fa_model(4)
    S = random_pd(rng, 4)
    Sfrac = [[Fraction(x).limit_denominator(10**6) for x in row] for row in S]
    Sq = np.array(Sfrac, dtype=float)
    for _ in range(100):
        th = _feasible_theta(rng)
        g = model.gradient(th, Sfrac)
        fd = central_gradient(lambda t: gaussian_loglik(fa_concentration(t), Sq), th)
        assert np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1)) < 1e-5


def test_hessian_matches_finite_differences():
    rng = np.random.default_rng(4)
    S = random_pd(rng, 4)
    Sfrac = [[Fraction(x).limit_denominator(10**6) for x in row] for row in S]
    model = _fa_model(4)
    for _ in range(10):
        th = _feasible_theta(rng)
        H = fa_hessian(th, np.array(Sfrac, dtype=float))
        fd = np.array([central_gradient(lambda t: model.gradient(t, Sfrac)[i], th, 1e-5) for i in range(8)])
        np.testing.assert_allclose(H, fd, rtol=1e-5, atol=1e-6)


def test_critical_system_sign_symmetry():
    from conftest import S1

    eqs = fa_critical_system(S1)
    rng = np.random.default_rng(5)
    for _ in range(10):
        th = list(rng.normal(size=8))
        mirror = th[:4] + [-x for x in th[4:]]
        a = [e.evaluate(th) for e in eqs]
        b = [e.evaluate(mirror) for e in eqs]
        np.testing.assert_allclose(b[:4], a[:4], rtol=1e-12)
        np.testing.assert_allclose(b[4:], [-x for x in a[4:]], rtol=1e-12)


def test_diagonal_S_solution():
    S = [[2, 0, 0], [0, 5, 0], [0, 0, Fraction(1, 3)]]
    th = [Fraction(1, 2), Fraction(1, 5), Fraction(3), 0, 0, 0]
    assert all(e.evaluate(th) == 0 for e in fa_critical_system(S))
    # the loading block of the Hessian vanishes there: diag(w)^-1 - S = 0
    H = fa_hessian(np.array(th, float), np.array(S, float))
    assert np.allclose(H[3:, 3:], 0)
    assert classify_critical(np.array(th, float), np.array(S, float)) == "degenerate"


def test_classify_rejects_infeasible():
    S = np.eye(2)
    with pytest.raises(ValueError):
        classify_critical(np.array([-1.0, 1.0, 0.0, 0.0]), S)
    with pytest.raises(ValueError):
        classify_critical(np.array([1.0, 1.0, 1.0, 1.0]), S)  # K singular


# -- boundary fits ---------------------------------------------------------------

def _boundary_closed_form(S, i):
    # w_i = 0 forces the i-th row of Sigma to match S; the others regress on X_i
    S = np.asarray(S, float)
    lam = S[i] / np.sqrt(S[i, i])
    Sig = np.outer(lam, lam)
    for j in range(len(S)):
        if j != i:
            Sig[j, j] = S[j, j]
    return Sig


def test_boundary_matches_closed_form():
    fit = boundary_mle(S2, 0, starts=4, seed=1)
    np.testing.assert_allclose(fit.sigma, _boundary_closed_form(S2, 0), atol=1e-8)
    np.testing.assert_allclose(fit.sigma[0], [31, 11, -1, 5], atol=1e-8)
    assert fit.grad_norm < 1e-6 and fit.agreement


def test_boundary_below_saturated():
    S = np.asarray(S2, float)
    sat = gaussian_loglik(np.linalg.inv(S), S)
    for i in range(4):
        assert boundary_mle(S, i, starts=3).loglik <= sat + 1e-12


def test_boundary_diagonal_S_below_interior():
    S = np.diag([2.0, 3.0, 1.0, 4.0])
    interior = gaussian_loglik(np.linalg.inv(S), S)  # lambda = 0 fits exactly
    assert boundary_mle(S, 2, starts=3).loglik <= interior + 1e-12


def test_boundary_argument_checks():
    with pytest.raises(IndexError):
        boundary_mle(S2, 4)
    with pytest.raises(NotPositiveDefiniteError):
        boundary_mle(-np.eye(4), 0)
    assert issubclass(ConvergenceError, RuntimeError)


# -- Lagrange systems -------------------------------------------------------------

@pytest.mark.parametrize("coords", ["covariance", "concentration"])
def test_lagrange_gaussian_independence(coords):
    d = GaussianDomain(2)
    I = gaussian_ci_ideal(CIStatement({1}, {2}), d)
    S = [[2, 1], [1, 3]]
    (sol,) = solve_lagrange(lagrange_system(I, d, S, coords), S)
    want = {"s11": 2, "s12": 0, "s22": 3} if coords == "covariance" else {"s11": 0.5, "s12": 0, "s22": 1 / 3}
    for k, v in want.items():
        assert sol[k] == pytest.approx(v, abs=1e-10)


def test_lagrange_saturated_gaussian():
    d = GaussianDomain(2)
    S = [[2, 1], [1, 3]]
    (sol,) = solve_lagrange(lagrange_system(Ideal(d.ring, []), d, S), S)
    assert [sol["s11"], sol["s12"], sol["s22"]] == pytest.approx([2, 1, 3], abs=1e-10)


def test_lagrange_discrete_independence():
    d = DiscreteDomain([2, 2])
    N = {(1, 1): 10, (1, 2): 20, (2, 1): 30, (2, 2): 40}
    I = discrete_ci_ideal(CIStatement({1}, {2}), d)
    (sol,) = solve_lagrange(lagrange_system(I, d, N), N)
    n = 100
    rows, cols = [30, 70], [40, 60]
    for (i, j), _ in N.items():
        assert sol[f"p{i}{j}"] == pytest.approx(rows[i - 1] * cols[j - 1] / n**2, abs=1e-10)
    (sat,) = solve_lagrange(lagrange_system(Ideal(d.ring, []), d, N), N)
    for (i, j), c in N.items():
        assert sat[f"p{i}{j}"] == pytest.approx(c / n, abs=1e-10)


def test_lagrange_rejects_bad_input():
    d = DiscreteDomain([2, 2])
    with pytest.raises(ValueError):
        lagrange_system(Ideal(d.ring, []), d, {(0, 0): 1})
    with pytest.raises(TypeError):
        lagrange_system(Ideal(d.ring, []), "poisson", {})
