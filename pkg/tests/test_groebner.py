import random

import pytest
import sympy

from algfam.groebner import BudgetExceededError
from algfam.ideal import Ideal, check_groebner, groebner, ideal_membership, normal_form
from algfam.poly import GREVLEX, LEX, Ring


def test_circle_lex():
    R = Ring(["x", "y"])
    G = groebner(Ideal(R, ["x^2 + y^2 - 1", "x - y"]), LEX)
    assert G.format() == ["x - y", "y^2 - 1/2"]


def test_redundant_generator():
    R = Ring(["x"])
    assert groebner(Ideal(R, ["x^2 - 1", "x - 1"])).format() == ["x - 1"]


def test_unit_ideal():
    R = Ring(["x", "y"])
    G = groebner(Ideal(R, ["x*y - 1", "x"]))
    assert G.is_unit()


def test_twisted_cubic_grevlex():
    R = Ring(["x", "y", "z"])
    G = groebner(Ideal(R, ["y - x^2", "z - x^3"]), GREVLEX)
    check_groebner(G)
    assert ideal_membership(R.parse("x*z - y^2"), G.ideal)
    assert not ideal_membership(R.parse("x"), G.ideal)


def test_normal_form_reduces_to_standard_monomials():
    R = Ring(["x", "y"])
    G = groebner(Ideal(R, ["x^2 - y", "y^2 - 2"]), LEX)
    nf = normal_form(R.parse("x^5"), G)
    assert nf == R.parse("2*x")


def test_budget_exceeded():
    R = Ring(["a", "b", "c", "d"])
    cyclic = ["a + b + c + d", "a*b + b*c + c*d + d*a", "a*b*c + b*c*d + c*d*a + d*a*b", "a*b*c*d - 1"]
    with pytest.raises(BudgetExceededError) as e:
        groebner(Ideal(R, cyclic), budget=3)
    assert e.value.budget == 3


def _sympy_gb(gens, names, order):
    syms = sympy.symbols(names)
    G = sympy.groebner([sympy.sympify(g.replace("^", "**")) for g in gens], *syms, order=order)
    # Poly.monic() divides by the lex leading coefficient; normalise in the basis order
    return {sympy.expand(g / sympy.LC(g, *syms, order=order)) for g in G.exprs}


@pytest.mark.parametrize("order", ["lex", "grevlex"])
def test_matches_sympy_on_random_systems(order):
    rng = random.Random(7)
    names = ["x", "y", "z"]
    R = Ring(names)
    for _ in range(12):
        gens = []
        for _ in range(rng.randint(2, 3)):
            terms = []
            for _ in range(rng.randint(2, 4)):
                c = rng.randint(-3, 3) or 1
                e = [rng.randint(0, 2) for _ in names]
                mono = "*".join(f"{n}^{k}" for n, k in zip(names, e) if k) or "1"
                terms.append(f"{c}*{mono}")
            gens.append(" + ".join(terms))
        G = groebner(Ideal(R, gens), order)
        check_groebner(G)
        ours = {sympy.sympify(s.replace("^", "**")).expand() for s in G.format()}
        theirs = _sympy_gb(gens, names, "lex" if order == "lex" else "grevlex")
        assert ours == theirs, (gens, ours, theirs)
