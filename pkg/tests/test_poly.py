from fractions import Fraction

import numpy as np
import pytest

from algfam.poly import GREVLEX, LEX, ParseError, Ring, RingMismatchError, TermOrder, as_fraction


@pytest.fixture
def R():
    return Ring(["x", "y", "z"])


def test_parse_and_format_roundtrip(R):
    f = R.parse("x^2 - 2*x*y + y**2")
    assert f.format() == "x^2 - 2*x*y + y^2"
    assert R.parse(f.format()) == f


def test_rational_coefficients(R):
    f = R.parse("1/2*x + 0.25*y - 3")
    assert f.format() == "1/2*x + 1/4*y - 3"
    assert f.evaluate([2, 4, 0]) == Fraction(-1)


def test_parse_errors(R):
    with pytest.raises(ParseError) as e:
        R.parse("x + * y")
    assert e.value.pos >= 0
    with pytest.raises(ParseError):
        R.parse("x / y")
    with pytest.raises(ParseError):
        R.parse("w + 1")
    with pytest.raises(ParseError):
        R.parse("(x + y")


def test_arithmetic(R):
    x, y, z = R.gens()
    assert (x + y) ** 2 == x**2 + 2 * x * y + y**2
    assert (x - x).is_zero()
    assert (x * y - y * x).is_zero()
    assert ((x + 1) * (x - 1)).format() == "x^2 - 1"
    assert (x / 2).format() == "1/2*x"


def test_ring_mismatch():
    a = Ring(["x"]).gen("x")
    b = Ring(["y"]).gen("y")
    with pytest.raises(RingMismatchError):
        a + b


def test_orders(R):
    f = R.parse("x*z^3 + y^2 + x^2")
    assert f.leading_monomial(LEX) == (2, 0, 0)
    assert f.leading_monomial(GREVLEX) == (1, 0, 3)
    assert TermOrder.from_name("lex") == LEX
    with pytest.raises(ValueError):
        TermOrder.from_name("weird")


def test_diff_and_substitute(R):
    x, y, z = R.gens()
    f = x**3 * y + z
    assert f.diff("x") == 3 * x**2 * y
    assert f.diff(2) == R.one()
    assert f.substitute({"x": 2}) == 8 * y + z
    assert f.substitute({"z": x}) == x**3 * y + x


def test_float_evaluation_and_compile(R):
    f = R.parse("x^2 + 3*y*z - 1")
    pt = [0.5, 2.0, -1.0]
    coef, exps = f.compile()
    val = np.prod(np.array(pt) ** exps, axis=1) @ coef
    assert val == pytest.approx(f.evaluate(pt))
    assert f.evaluate([1j, 0.0, 0.0]) == pytest.approx(-2)


def test_as_fraction():
    assert as_fraction("0.1") == Fraction(1, 10)
    assert as_fraction("3/4") == Fraction(3, 4)
    with pytest.raises(TypeError):
        as_fraction(0.1)


def test_exponent_overflow_guard(R):
    x = R.gen("x")
    with pytest.raises((ValueError, OverflowError)):
        x ** (2**40)
