"""Sparse multivariate polynomials with exact rational coefficients.

A :class:`Ring` fixes an ordered tuple of variable names.  A
:class:`Polynomial` maps exponent tuples to nonzero :class:`fractions.Fraction`
coefficients.  Polynomials are treated as immutable values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

__all__ = [
    "Ring",
    "Polynomial",
    "TermOrder",
    "LEX",
    "GREVLEX",
    "ParseError",
    "RingMismatchError",
    "as_fraction",
]

# exponents are kept inside a signed 32-bit range
MAX_EXPONENT = 2**31 - 1

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class RingMismatchError(ValueError):
    """Raised when combining polynomials from different rings."""

    def __init__(self, a: "Ring", b: "Ring"):
        super().__init__(f"ring mismatch: {a!r} vs {b!r}")
        self.rings = (a, b)


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos}: {text!r}")
        self.text = text
        self.pos = pos


def as_fraction(value) -> Fraction:
    """Convert ints, Fractions, and decimal strings exactly.

    Binary floats are rejected; pass the decimal string instead.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        return Fraction(value.strip())
    if hasattr(value, "numerator") and hasattr(value, "denominator"):
        # gmpy2.mpq and friends
        return Fraction(int(value.numerator), int(value.denominator))
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


# ---------------------------------------------------------------------------
# term orders
# ---------------------------------------------------------------------------


def _grevlex_key(m):
    return (sum(m),) + tuple(-e for e in reversed(m))


@dataclass(frozen=True)
class TermOrder:
    """A monomial order.  ``key(m)`` sorts monomials ascending.

    ``kind`` is ``"lex"``, ``"grevlex"`` or ``"block"``.  A block order
    compares the first ``block`` variables by grevlex and breaks ties with
    grevlex on the rest, so any monomial involving the front block beats
    every monomial free of it.
    """

    kind: str = "grevlex"
    block: int = 0

    def __post_init__(self):
        if self.kind not in ("lex", "grevlex", "block"):
            raise ValueError(f"unknown term order {self.kind!r}")
        if self.kind == "block" and self.block < 1:
            raise ValueError("block order needs a positive front-block size")

    @classmethod
    def from_name(cls, name: str) -> "TermOrder":
        name = name.strip().lower()
        if name in ("lex", "plex"):
            return cls("lex")
        if name in ("grevlex", "degrevlex", "drl"):
            return cls("grevlex")
        if name.startswith("block"):
            _, _, k = name.partition(":")
            return cls("block", int(k))
        raise ValueError(f"unknown term order {name!r}")

    @property
    def name(self) -> str:
        return f"block:{self.block}" if self.kind == "block" else self.kind

    def key(self, m: tuple) -> tuple:
        """Flat integer tuple; larger key means larger monomial."""
        if self.kind == "lex":
            return m
        if self.kind == "grevlex":
            return _grevlex_key(m)
        k = self.block
        return _grevlex_key(m[:k]) + _grevlex_key(m[k:])


LEX = TermOrder("lex")
GREVLEX = TermOrder("grevlex")


# ---------------------------------------------------------------------------
# rings
# ---------------------------------------------------------------------------


class Ring:
    """Polynomial ring Q[x_1, ..., x_n] over an ordered list of names."""

    __slots__ = ("names", "_index")

    def __init__(self, names):
        names = tuple(names)
        for nm in names:
            if not _NAME_RE.match(nm):
                raise ValueError(f"invalid variable name {nm!r}")
        if len(set(names)) != len(names):
            raise ValueError("variable names must be distinct")
        self.names = names
        self._index = {nm: i for i, nm in enumerate(names)}

    @property
    def ngens(self) -> int:
        return len(self.names)

    def __len__(self):
        return len(self.names)

    def __eq__(self, other):
        return isinstance(other, Ring) and self.names == other.names

    def __hash__(self):
        return hash(("Ring", self.names))

    def __repr__(self):
        return f"Ring({', '.join(self.names)})"

    def index(self, name) -> int:
        if isinstance(name, (int, np.integer)):
            i = int(name)
            if not 0 <= i < self.ngens:
                raise IndexError(f"variable index {i} out of range for {self!r}")
            return i
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r} in {self!r}") from None

    def gen(self, name) -> "Polynomial":
        i = self.index(name)
        m = [0] * self.ngens
        m[i] = 1
        return Polynomial(self, {tuple(m): Fraction(1)}, _trusted=True)

    def gens(self) -> list:
        return [self.gen(i) for i in range(self.ngens)]

    def __getitem__(self, name) -> "Polynomial":
        return self.gen(name)

    def zero(self) -> "Polynomial":
        return Polynomial(self, {}, _trusted=True)

    def one(self) -> "Polynomial":
        return self.const(1)

    def const(self, c) -> "Polynomial":
        c = as_fraction(c)
        if c == 0:
            return self.zero()
        return Polynomial(self, {(0,) * self.ngens: c}, _trusted=True)

    def monomial(self, exponents, coeff=1) -> "Polynomial":
        exps = tuple(int(e) for e in exponents)
        if len(exps) != self.ngens:
            raise ValueError("exponent vector length does not match ring arity")
        return Polynomial(self, {exps: as_fraction(coeff)})

    def parse(self, text: str) -> "Polynomial":
        return _Parser(text, self).parse()

    def extend(self, names) -> "Ring":
        """Ring with extra variables appended at the end."""
        return Ring(self.names + tuple(names))


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------


def _check_exponent(e):
    if e > MAX_EXPONENT:
        raise OverflowError(f"exponent {e} exceeds {MAX_EXPONENT}")


class Polynomial:
    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: Ring, terms=None, *, _trusted=False):
        self.ring = ring
        self._hash = None
        if _trusted:
            self.terms = terms
            return
        n = ring.ngens
        clean = {}
        for m, c in (terms or {}).items():
            m = tuple(int(e) for e in m)
            if len(m) != n or min(m, default=0) < 0:
                raise ValueError(f"bad exponent vector {m} for {ring!r}")
            for e in m:
                _check_exponent(e)
            c = as_fraction(c)
            if c:
                clean[m] = clean.get(m, 0) + c
                if not clean[m]:
                    del clean[m]
        self.terms = clean

    # -- basic predicates --------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self.terms.get((0,) * self.ring.ngens, Fraction(0))

    def total_degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(m) for m in self.terms)

    def variables(self) -> set:
        """Indices of variables that occur."""
        used = set()
        for m in self.terms:
            used.update(i for i, e in enumerate(m) if e)
        return used

    def __len__(self):
        return len(self.terms)

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.ring != self.ring:
                raise RingMismatchError(self.ring, other.ring)
            return other
        return self.ring.const(other)

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Polynomial(self.ring, out, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.ring, {m: -c for m, c in self.terms.items()}, _trusted=True)

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            try:
                c = as_fraction(other)
            except TypeError:
                return NotImplemented
            if not c:
                return self.ring.zero()
            return Polynomial(self.ring, {m: c * a for m, a in self.terms.items()}, _trusted=True)
        other = self._coerce(other)
        if self.terms and other.terms:
            top = max(max(m) for m in self.terms) + max(max(m) for m in other.terms)
            _check_exponent(top)
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    del out[m]
        return Polynomial(self.ring, out, _trusted=True)

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = as_fraction(other)
        if not c:
            raise ZeroDivisionError("division of polynomial by zero")
        return self * (1 / c)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers need a non-negative integer exponent")
        result = self.ring.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.ring == other.ring and self.terms == other.terms
        try:
            c = as_fraction(other)
        except TypeError:
            return NotImplemented
        return self == self.ring.const(c)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring, frozenset(self.terms.items())))
        return self._hash

    # -- order-dependent access ---------------------------------------------

    def sorted_terms(self, order: TermOrder = GREVLEX):
        """Terms from largest to smallest monomial."""
        return sorted(self.terms.items(), key=lambda t: order.key(t[0]), reverse=True)

    def leading_term(self, order: TermOrder = GREVLEX):
        """(monomial, coefficient) of the order-maximal term."""
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        m = max(self.terms, key=order.key)
        return m, self.terms[m]

    def leading_monomial(self, order: TermOrder = GREVLEX) -> tuple:
        return self.leading_term(order)[0]

    def leading_coefficient(self, order: TermOrder = GREVLEX) -> Fraction:
        return self.leading_term(order)[1]

    def monic(self, order: TermOrder = GREVLEX) -> "Polynomial":
        if not self.terms:
            return self
        return self * (1 / self.leading_coefficient(order))

    # -- calculus and evaluation -----------------------------------------------

    def diff(self, var) -> "Polynomial":
        """Formal partial derivative."""
        i = self.ring.index(var)
        out = {}
        for m, c in self.terms.items():
            e = m[i]
            if e:
                nm = m[:i] + (e - 1,) + m[i + 1:]
                out[nm] = c * e
        return Polynomial(self.ring, out, _trusted=True)

    def evaluate(self, point):
        """Evaluate at a point.

        Exact (``Fraction``) when every coordinate is an int or rational;
        otherwise coordinates and coefficients are converted to float or
        complex.
        """
        point = list(point)
        if len(point) != self.ring.ngens:
            raise ValueError(
                f"point has {len(point)} coordinates, ring has {self.ring.ngens} variables"
            )
        exact = all(isinstance(a, (int, Rational, np.integer)) and not isinstance(a, bool) for a in point)
        if exact:
            pt = [as_fraction(a) for a in point]
            total = Fraction(0)
            for m, c in self.terms.items():
                v = c
                for a, e in zip(pt, m):
                    if e:
                        v *= a**e
                total += v
            return total
        pt = [complex(a) if isinstance(a, complex) or np.iscomplexobj(a) else float(a) for a in point]
        total = 0.0
        for m, c in self.terms.items():
            v = float(c)
            for a, e in zip(pt, m):
                if e:
                    v *= a**e
            total += v
        return total

    def __call__(self, *point):
        if len(point) == 1 and not isinstance(point[0], (int, float, complex, Rational)):
            point = point[0]
        return self.evaluate(point)

    def substitute(self, values: dict) -> "Polynomial":
        """Replace some variables by rational constants or polynomials of the same ring."""
        subs = {self.ring.index(k): v for k, v in values.items()}
        result = self.ring.zero()
        for m, c in self.terms.items():
            term = self.ring.const(c)
            rest = list(m)
            for i, v in subs.items():
                if m[i]:
                    rest[i] = 0
                    term = term * (v if isinstance(v, Polynomial) else self.ring.const(v)) ** m[i]
            result = result + term * Polynomial(self.ring, {tuple(rest): Fraction(1)}, _trusted=True)
        return result

    def to_ring(self, ring: Ring, mapping=None) -> "Polynomial":
        """Move into another ring, matching variables by name (or by ``mapping``)."""
        mapping = mapping or {}
        used = self.variables()
        target = [
            ring.index(mapping.get(nm, nm)) if i in used else None
            for i, nm in enumerate(self.ring.names)
        ]
        out = {}
        for m, c in self.terms.items():
            nm = [0] * ring.ngens
            for src, e in enumerate(m):
                if e:
                    nm[target[src]] += e
            nm = tuple(nm)
            out[nm] = out.get(nm, 0) + c
        return Polynomial(ring, out)

    # -- text ----------------------------------------------------------------

    def format(self, order: TermOrder = GREVLEX) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for k, (m, c) in enumerate(self.sorted_terms(order)):
            mono = "*".join(
                nm if e == 1 else f"{nm}^{e}" for nm, e in zip(self.ring.names, m) if e
            )
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if not mono:
                body = str(a)
            elif a == 1:
                body = mono
            else:
                body = f"{a}*{mono}"
            if k == 0:
                pieces.append(("-" if c < 0 else "") + body)
            else:
                pieces.append(f" {sign} {body}")
        return "".join(pieces)

    def __str__(self):
        return self.format()

    def __repr__(self):
        return f"Polynomial({self.format()!r})"

    # -- numeric compilation ---------------------------------------------------

    def compile(self):
        """Return (coefficients, exponent matrix) as float arrays for fast evaluation."""
        if not self.terms:
            return np.zeros(0), np.zeros((0, self.ring.ngens), dtype=np.int64)
        mons = list(self.terms)
        coef = np.array([float(self.terms[m]) for m in mons])
        exps = np.array(mons, dtype=np.int64)
        return coef, exps


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z][A-Za-z0-9_]*)|(?P<op>\*\*|[-+*/^()]))"
)


class _Parser:
    """Recursive-descent parser.

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ['^' integer]
    atom   := number | name | '(' expr ')' | ('+'|'-') factor
    """

    def __init__(self, text: str, ring: Ring):
        self.text = text
        self.ring = ring
        self.tokens = []
        pos = 0
        text_len = len(text)
        while pos < text_len:
            if text[pos:].strip() == "":
                break
            mt = _TOKEN_RE.match(text, pos)
            if not mt or mt.end() == pos:
                raise ParseError("unexpected character", text, pos)
            kind = mt.lastgroup
            start = mt.start(kind)
            self.tokens.append((kind, mt.group(kind), start))
            pos = mt.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}", self.text, pos)

    def parse(self) -> Polynomial:
        if not self.tokens:
            raise ParseError("empty expression", self.text, 0)
        p = self.expr()
        kind, val, pos = self.peek()
        if kind is not None:
            raise ParseError(f"unexpected token {val!r}", self.text, pos)
        return p

    def expr(self):
        result = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                result = result + rhs if val == "+" else result - rhs
            else:
                return result

    def term(self):
        result = self.factor()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val in ("*", "/"):
                self.take()
                rhs = self.factor()
                if val == "*":
                    result = result * rhs
                else:
                    if not rhs.is_constant() or rhs.is_zero():
                        raise ParseError("division only by a nonzero constant", self.text, pos)
                    result = result / rhs.constant_value()
            else:
                return result

    def factor(self):
        base = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val in ("^", "**"):
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                raise ParseError("exponent must be a non-negative integer", self.text, pos)
            return base ** int(val)
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return self.ring.const(Fraction(val))
        if kind == "name":
            if val not in self.ring._index:
                raise ParseError(f"unknown variable {val!r}", self.text, pos)
            return self.ring.gen(val)
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        if kind == "op" and val in "+-":
            inner = self.factor()
            return inner if val == "+" else -inner
        if kind is None:
            raise ParseError("unexpected end of input", self.text, pos)
        raise ParseError(f"unexpected token {val!r}", self.text, pos)
