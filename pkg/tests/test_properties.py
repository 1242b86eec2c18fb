"""Randomized invariants of the polynomial engine, Gröbner bases and seeded samplers."""

from fractions import Fraction

import numpy as np
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from algfam.asymptotics import limit_law_min_chisq, simulate_lr_ci
from algfam.groebner import BudgetExceededError
from algfam.ideal import Ideal, check_groebner, groebner, ideal_membership, normal_form
from algfam.models import nonneg_rank_evidence
from algfam.poly import GREVLEX, LEX, Ring
from algfam.solve import Box, multistart_solve

R = Ring(["x", "y", "z"])
ORDERS = st.sampled_from([LEX, GREVLEX])
FAST = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])

coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=4)
monos = st.tuples(*[st.integers(0, 3)] * 3)


@st.composite
def polys(draw, max_terms=5, max_deg=3):
    terms = draw(st.dictionaries(monos.filter(lambda m: sum(m) <= max_deg), coeffs, max_size=max_terms))
    return sum((R.monomial(m, c) for m, c in terms.items()), R.zero())


nonzero_polys = polys().filter(lambda f: not f.is_zero())
points = st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=5), min_size=3, max_size=3)


# -- ring axioms ------------------------------------------------------------------

@FAST
@given(polys(), polys(), polys())
def test_ring_axioms(f, g, h):
    assert f + g == g + f and f * g == g * f
    assert (f + g) + h == f + (g + h)
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert f - f == R.zero() and f * R.one() == f and f + R.zero() == f


@FAST
@given(nonzero_polys, nonzero_polys, ORDERS)
def test_leading_monomial_multiplicative(f, g, order):
    lm = tuple(a + b for a, b in zip(f.leading_monomial(order), g.leading_monomial(order)))
    assert (f * g).leading_monomial(order) == lm
    assert (f * g).leading_coefficient(order) == f.leading_coefficient(order) * g.leading_coefficient(order)


@FAST
@given(polys())
def test_parse_format_roundtrip(f):
    assert R.parse(f.format()) == f
    assert R.parse(f.format(LEX)) == f


@FAST
@given(polys(), polys(), points)
def test_evaluation_is_a_homomorphism(f, g, pt):
    assert (f + g).evaluate(pt) == f.evaluate(pt) + g.evaluate(pt)
    assert (f * g).evaluate(pt) == f.evaluate(pt) * g.evaluate(pt)


@FAST
@given(polys(), polys(), st.sampled_from(["x", "y", "z"]))
def test_product_rule(f, g, v):
    assert (f * g).diff(v) == f.diff(v) * g + f * g.diff(v)


@FAST
@given(polys(max_deg=4), st.lists(st.floats(-1.5, 1.5), min_size=3, max_size=3))
def test_derivative_matches_finite_differences(f, pt):
    h = 1e-6
    x = np.array(pt)
    scale = 1 + sum(abs(float(c)) for c in f.terms.values())
    for i, v in enumerate("xyz"):
        e = np.eye(3)[i] * h
        fd = (float(f.evaluate(list(x + e))) - float(f.evaluate(list(x - e)))) / (2 * h)
        assert abs(float(f.diff(v).evaluate(list(x))) - fd) < 1e-6 * scale


# -- Gröbner bases ----------------------------------------------------------------

@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.lists(polys(max_terms=4, max_deg=2).filter(lambda f: not f.is_zero()), min_size=1, max_size=3), ORDERS)
def test_groebner_invariants(gens, order):
    I = Ideal(R, gens)
    try:
        G = groebner(I, order, budget=400)
    except BudgetExceededError:
        assume(False)
    check_groebner(G)  # monic, reduced, S-polynomials and generators reduce to zero
    for f in gens:
        assert normal_form(f, G).is_zero()
    # the basis does not depend on the generating set
    f0 = gens[0]
    G2 = groebner(Ideal(R, gens + [f0 * R["x"] + f0]), order, budget=400)
    assert G2.basis == G.basis


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.lists(polys(max_terms=3, max_deg=2).filter(lambda f: not f.is_zero()), min_size=1, max_size=2),
       polys(max_terms=3, max_deg=2))
def test_membership_of_combinations(gens, a):
    I = Ideal(R, gens)
    combo = a * gens[0] + (gens[-1] * R["y"] if len(gens) > 1 else R.zero())
    assert ideal_membership(combo, I)
    assert ideal_membership(R.zero(), I)


# -- seed determinism -------------------------------------------------------------

@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_seed_determinism_samplers(seed):
    a = limit_law_min_chisq(3000, seed=seed)
    b = limit_law_min_chisq(3000, seed=seed, threads=2)
    assert np.array_equal(a.samples, b.samples)
    c = simulate_lr_ci(np.eye(3), 30, 50, seed=seed)
    d = simulate_lr_ci(np.eye(3), 30, 50, seed=seed)
    assert np.array_equal(c.samples, d.samples)


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**16))
def test_seed_determinism_solvers(seed):
    S = Ring(["u", "v"])
    sys_ = [S.parse("u^2 + v^2 - 4"), S.parse("u*v - 1")]
    a = multistart_solve(sys_, Box([0, 0], [3, 3]), 80, seed=seed)
    b = multistart_solve(sys_, Box([0, 0], [3, 3]), 80, seed=seed, threads=2)
    assert [s.x.tolist() for s in a] == [s.x.tolist() for s in b]
    q = [[Fraction(1), Fraction(2), Fraction(0)], [Fraction(0), Fraction(1), Fraction(3)], [Fraction(2), Fraction(0), Fraction(1)]]
    r1 = nonneg_rank_evidence(q, rank=2, restarts=4, seed=seed, iters=500)
    r2 = nonneg_rank_evidence(q, rank=2, restarts=4, seed=seed, iters=500)
    assert np.array_equal(r1.residuals, r2.residuals)
