"""Ideals and the geometry built on Gröbner bases.

Everything here is exact.  Elimination uses a block order with the
eliminated variables moved to the front of a temporary ring.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .groebner import (
    DEFAULT_BUDGET,
    BudgetExceededError,
    _from_kernel,
    _to_kernel,
    buchberger,
    kernel_reduce,
    kernel_spolys_reduce_to_zero,
)
from .poly import GREVLEX, Polynomial, Ring, RingMismatchError, TermOrder, as_fraction

__all__ = [
    "Ideal",
    "GroebnerBasis",
    "PolyMatrix",
    "QuotientBasis",
    "BudgetExceededError",
    "EmptyVarietyError",
    "groebner",
    "normal_form",
    "ideal_membership",
    "eliminate",
    "saturate",
    "quotient",
    "intersect",
    "dimension",
    "standard_monomials",
    "count_solutions",
    "jacobian",
    "minors",
    "determinant",
    "singular_locus",
    "tangent_cone_at_union",
    "TangentConeResult",
    "implicitize",
]

INFINITE = "infinite"


class EmptyVarietyError(ValueError):
    """The ideal is the whole ring, so its variety is empty."""


class Ideal:
    """Finitely generated ideal; zero generators are dropped."""

    __slots__ = ("ring", "gens", "_gb_cache")

    def __init__(self, ring: Ring, gens=()):
        self.ring = ring
        kept = []
        for g in gens:
            if not isinstance(g, Polynomial):
                g = ring.parse(g) if isinstance(g, str) else ring.const(g)
            if g.ring != ring:
                raise RingMismatchError(ring, g.ring)
            if g:
                kept.append(g)
        self.gens = tuple(kept)
        self._gb_cache = {}

    def __repr__(self):
        return f"Ideal<{', '.join(map(str, self.gens)) or '0'}>"

    def __add__(self, other):
        if isinstance(other, Ideal):
            if other.ring != self.ring:
                raise RingMismatchError(self.ring, other.ring)
            return Ideal(self.ring, self.gens + other.gens)
        return Ideal(self.ring, self.gens + tuple(other))

    def is_zero(self) -> bool:
        return not self.gens

    def groebner(self, order: TermOrder = GREVLEX, budget: int = DEFAULT_BUDGET) -> "GroebnerBasis":
        return groebner(self, order, budget)

    def __contains__(self, p) -> bool:
        return ideal_membership(p, self)

    def equals(self, other: "Ideal") -> bool:
        """Equality as ideals (same reduced basis)."""
        return groebner(self).basis == groebner(other).basis


@dataclass(frozen=True)
class GroebnerBasis:
    ideal: Ideal
    order: TermOrder
    basis: tuple

    @property
    def ring(self) -> Ring:
        return self.ideal.ring

    def leading_monomials(self):
        return [g.leading_monomial(self.order) for g in self.basis]

    def is_unit(self) -> bool:
        return len(self.basis) == 1 and self.basis[0].is_constant()

    def format(self) -> list:
        return [g.format(self.order) for g in self.basis]

    def __iter__(self):
        return iter(self.basis)

    def __len__(self):
        return len(self.basis)


def check_groebner(G: GroebnerBasis) -> None:
    """Raise AssertionError unless G is a reduced Gröbner basis of its ideal."""
    order = G.order
    kb = [_to_kernel(g) for g in G.basis]
    lms = []
    for g in G.basis:
        m, c = g.leading_term(order)
        if c != 1:
            raise AssertionError(f"basis element not monic: {g}")
        lms.append(m)
    for i, g in enumerate(G.basis):
        for m in g.terms:
            for j, lm in enumerate(lms):
                if j != i and all(a >= b for a, b in zip(m, lm)):
                    raise AssertionError("basis is not reduced")
    if not kernel_spolys_reduce_to_zero(kb, order):
        raise AssertionError("an S-polynomial does not reduce to zero")
    for f in G.ideal.gens:
        if kernel_reduce(_to_kernel(f), kb, order):
            raise AssertionError(f"generator {f} has nonzero normal form")


def groebner(
    I: Ideal,
    order: TermOrder = GREVLEX,
    budget: int = DEFAULT_BUDGET,
    verify: bool = True,
) -> GroebnerBasis:
    """Reduced Gröbner basis of ``I``.

    Raises :class:`BudgetExceededError` after ``budget`` S-pairs.  With
    ``verify`` the result is re-checked (S-pairs and generator membership)
    before it is returned.
    """
    if isinstance(order, str):
        order = TermOrder.from_name(order)
    cached = I._gb_cache.get(order)
    if cached is not None:
        return cached
    raw = buchberger([_to_kernel(g) for g in I.gens], order, budget)
    G = GroebnerBasis(I, order, tuple(_from_kernel(I.ring, f) for f in raw))
    if verify:
        check_groebner(G)
    I._gb_cache[order] = G
    return G


def _as_basis(G) -> GroebnerBasis:
    return G if isinstance(G, GroebnerBasis) else groebner(G)


def normal_form(p: Polynomial, G) -> Polynomial:
    """Remainder of ``p`` modulo a Gröbner basis (an Ideal is converted first)."""
    G = _as_basis(G)
    if p.ring != G.ring:
        raise RingMismatchError(p.ring, G.ring)
    r = kernel_reduce(_to_kernel(p), [_to_kernel(g) for g in G.basis], G.order)
    return _from_kernel(G.ring, r)


def ideal_membership(p, I: Ideal, budget: int = DEFAULT_BUDGET) -> bool:
    if isinstance(p, str):
        p = I.ring.parse(p)
    if p.ring != I.ring:
        raise RingMismatchError(p.ring, I.ring)
    if not p:
        return True
    if not I.gens:
        return False
    return normal_form(p, groebner(I, budget=budget)).is_zero()


def _var_indices(ring: Ring, vars_) -> list:
    return sorted({ring.index(v) for v in vars_})


def eliminate(I: Ideal, drop_vars, budget: int = DEFAULT_BUDGET) -> Ideal:
    """Generators of the elimination ideal, in the ring without ``drop_vars``."""
    drop = _var_indices(I.ring, drop_vars)
    keep = [i for i in range(I.ring.ngens) if i not in drop]
    small = Ring([I.ring.names[i] for i in keep])
    if not drop:
        return Ideal(small, [g.to_ring(small) for g in I.gens])
    if not I.gens:
        return Ideal(small)
    work = Ring([I.ring.names[i] for i in drop + keep])
    J = Ideal(work, [g.to_ring(work) for g in I.gens])
    G = groebner(J, TermOrder("block", len(drop)), budget)
    nd = len(drop)
    out = [g for g in G.basis if all(not any(m[:nd]) for m in g.terms)]
    return Ideal(small, [g.to_ring(small) for g in out])


def _fresh_name(ring: Ring, stem: str = "t") -> str:
    name = stem
    k = 0
    while name in ring.names:
        k += 1
        name = f"{stem}{k}"
    return name


def saturate(I: Ideal, f: Polynomial, budget: int = DEFAULT_BUDGET) -> Ideal:
    """(I : f^inf) via elimination of t from I + <1 - t f>."""
    if f.ring != I.ring:
        raise RingMismatchError(f.ring, I.ring)
    if not f:
        raise ValueError("cannot saturate by the zero polynomial")
    t = _fresh_name(I.ring)
    big = I.ring.extend([t])
    gens = [g.to_ring(big) for g in I.gens]
    gens.append(big.one() - big.gen(t) * f.to_ring(big))
    J = eliminate(Ideal(big, gens), [t], budget)
    return Ideal(I.ring, [g.to_ring(I.ring) for g in J.gens])


def intersect(I: Ideal, J: Ideal, budget: int = DEFAULT_BUDGET) -> Ideal:
    """I cap J as the t-free part of t*I + (1 - t)*J."""
    if I.ring != J.ring:
        raise RingMismatchError(I.ring, J.ring)
    t = _fresh_name(I.ring)
    big = I.ring.extend([t])
    tt = big.gen(t)
    gens = [tt * g.to_ring(big) for g in I.gens]
    gens += [(big.one() - tt) * g.to_ring(big) for g in J.gens]
    K = eliminate(Ideal(big, gens), [t], budget)
    return Ideal(I.ring, [g.to_ring(I.ring) for g in K.gens])


def quotient(I: Ideal, f: Polynomial, budget: int = DEFAULT_BUDGET) -> Ideal:
    """(I : f) = {g : g f in I}, from I cap <f> divided by f."""
    if f.ring != I.ring:
        raise RingMismatchError(f.ring, I.ring)
    if not f:
        raise ValueError("cannot take the quotient by the zero polynomial")
    K = intersect(I, Ideal(I.ring, [f]), budget)
    return Ideal(I.ring, [_exact_divide(g, f) for g in K.gens])


def _exact_divide(g: Polynomial, f: Polynomial) -> Polynomial:
    """g / f for f dividing g exactly (single-divisor division algorithm)."""
    q = f.ring.zero()
    r = g
    lm_f = f.leading_monomial()
    lc_f = f.leading_coefficient()
    while r:
        m = r.leading_monomial()
        if any(a < b for a, b in zip(m, lm_f)):
            raise ArithmeticError("polynomial does not divide exactly")
        t = f.ring.monomial(tuple(a - b for a, b in zip(m, lm_f)), r.leading_coefficient() / lc_f)
        q = q + t
        r = r - t * f
    return q


def _is_unit(I: Ideal, budget: int) -> bool:
    return bool(I.gens) and groebner(I, budget=budget).is_unit()


def dimension(I: Ideal, budget: int = DEFAULT_BUDGET) -> int:
    """Krull dimension as the size of a largest independent variable set.

    A subset S is independent when no nonzero element of I involves only
    the variables in S, i.e. the elimination of the complement is zero.
    """
    n = I.ring.ngens
    if not I.gens:
        return n
    if _is_unit(I, budget):
        raise EmptyVarietyError("empty variety: the ideal contains 1")
    for size in range(n, -1, -1):
        for S in itertools.combinations(range(n), size):
            drop = [i for i in range(n) if i not in S]
            if eliminate(I, drop, budget).is_zero():
                return size
    return 0


@dataclass(frozen=True)
class QuotientBasis:
    """Standard monomials; ``None`` when there are infinitely many."""

    standard_monomials: tuple | None

    @property
    def finite(self) -> bool:
        return self.standard_monomials is not None

    def __len__(self):
        if self.standard_monomials is None:
            raise ValueError("infinitely many standard monomials")
        return len(self.standard_monomials)


def standard_monomials(G: GroebnerBasis) -> QuotientBasis:
    n = G.ring.ngens
    lms = G.leading_monomials()
    if any(not any(m) for m in lms):
        return QuotientBasis(())
    # finite iff every variable has a pure power among the leading monomials
    bounds = []
    for i in range(n):
        pures = [m[i] for m in lms if m[i] and all(e == 0 for k, e in enumerate(m) if k != i)]
        if not pures:
            return QuotientBasis(None)
        bounds.append(min(pures))

    out = []

    def walk(prefix):
        # depth-first over the staircase; divisibility is checked on the prefix
        i = len(prefix)
        if i == n:
            out.append(tuple(prefix))
            return
        for e in range(bounds[i]):
            cand = prefix + [e]
            if any(all(c >= m[k] for k, c in enumerate(cand)) and not any(m[i + 1:]) for m in lms):
                break
            walk(cand)

    walk([])
    return QuotientBasis(tuple(out))


def count_solutions(G: GroebnerBasis):
    """Number of standard monomials, or ``"infinite"``."""
    qb = standard_monomials(_as_basis(G))
    return len(qb) if qb.finite else INFINITE


class PolyMatrix:
    """Rectangular grid of polynomials over one ring."""

    def __init__(self, rows):
        rows = [list(r) for r in rows]
        if not rows or not rows[0]:
            raise ValueError("empty matrix")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("ragged matrix")
        ring = rows[0][0].ring
        for r in rows:
            for e in r:
                if e.ring != ring:
                    raise RingMismatchError(ring, e.ring)
        self.rows = rows
        self.ring = ring

    @property
    def shape(self):
        return len(self.rows), len(self.rows[0])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def submatrix(self, rows, cols) -> "PolyMatrix":
        return PolyMatrix([[self.rows[i][j] for j in cols] for i in rows])

    def evaluate(self, point):
        return [[e.evaluate(point) for e in r] for r in self.rows]

    def __repr__(self):
        return "PolyMatrix(" + repr([[str(e) for e in r] for r in self.rows]) + ")"


def determinant(M: PolyMatrix) -> Polynomial:
    """Cofactor expansion along the first row."""
    n, m = M.shape
    if n != m:
        raise ValueError("determinant of a non-square matrix")
    return _det(M.rows, M.ring)


def _det(rows, ring):
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = ring.zero()
    for j, a in enumerate(rows[0]):
        if not a:
            continue
        sub = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = a * _det(sub, ring)
        total = total + term if j % 2 == 0 else total - term
    return total


def jacobian(fs, ring: Ring | None = None) -> PolyMatrix:
    fs = list(fs)
    ring = ring or fs[0].ring
    return PolyMatrix([[f.diff(j) for j in range(ring.ngens)] for f in fs])


def minors(M: PolyMatrix, c: int) -> list:
    """All c x c minors, rows then columns in lexicographic subset order."""
    r, k = M.shape
    if not 1 <= c <= min(r, k):
        raise ValueError(f"minor size {c} out of range for a {r}x{k} matrix")
    out = []
    for rows in itertools.combinations(range(r), c):
        for cols in itertools.combinations(range(k), c):
            out.append(determinant(M.submatrix(rows, cols)))
    return out


def singular_locus(I: Ideal, codim: int | None = None, budget: int = DEFAULT_BUDGET) -> Ideal:
    """<c x c minors of the Jacobian> + I.

    ``codim`` defaults to ambient dimension minus :func:`dimension`.
    """
    n = I.ring.ngens
    if codim is None:
        codim = n - dimension(I, budget)
    if not I.gens:
        if codim != 0:
            raise ValueError("the zero ideal has codimension 0")
        return Ideal(I.ring, [I.ring.one()])
    if not 1 <= codim <= min(len(I.gens), n):
        raise ValueError(f"codimension {codim} out of range")
    J = jacobian(I.gens, I.ring)
    gens, seen = [], set()
    for g in list(minors(J, codim)) + list(I.gens):
        if not g:
            continue
        if g.leading_coefficient() < 0:
            g = -g
        if g not in seen:
            seen.add(g)
            gens.append(g)
    return Ideal(I.ring, gens)


@dataclass
class TangentConeResult:
    planes: list
    skipped: list = field(default_factory=list)


def tangent_cone_at_union(components, point) -> TangentConeResult:
    """Tangent planes at ``point`` of each smooth component through it.

    Each plane is the linear ideal spanned by rows of J(point) (x - point).
    Components whose generators do not all vanish at the point are listed
    in ``skipped`` by position.
    """
    components = list(components)
    if not components:
        raise ValueError("no components given")
    pt = [as_fraction(a) for a in point]
    planes, skipped = [], []
    for k, comp in enumerate(components):
        if any(g.evaluate(pt) != 0 for g in comp.gens):
            skipped.append(k)
            continue
        ring = comp.ring
        shifted = [ring.gen(i) - pt[i] for i in range(ring.ngens)]
        lin = []
        for g in comp.gens:
            grad = [g.diff(i).evaluate(pt) for i in range(ring.ngens)]
            row = ring.zero()
            for c, s in zip(grad, shifted):
                if c:
                    row = row + s * c
            lin.append(row)
        plane = Ideal(ring, lin)
        planes.append(Ideal(ring, groebner(plane).basis) if plane.gens else plane)
    if not planes:
        raise ValueError("point lies on none of the components")
    return TangentConeResult(planes, skipped)


def implicitize(
    param_map,
    target_names=None,
    budget: int = DEFAULT_BUDGET,
) -> Ideal:
    """Vanishing ideal of the Zariski closure of a polynomial map's image.

    ``param_map`` is a list of polynomials in one parameter ring; the
    result lives in a ring with ``target_names`` (default y1, y2, ...).
    """
    param_map = list(param_map)
    pring = param_map[0].ring
    if target_names is None:
        target_names = [f"y{i + 1}" for i in range(len(param_map))]
    target_names = list(target_names)
    if len(target_names) != len(param_map):
        raise ValueError("need one target name per map component")
    clash = set(target_names) & set(pring.names)
    if clash:
        raise ValueError(f"target names clash with parameters: {sorted(clash)}")
    big = Ring(list(pring.names) + target_names)
    graph = [
        big.gen(y) - psi.to_ring(big) for y, psi in zip(target_names, param_map)
    ]
    return eliminate(Ideal(big, graph), list(pring.names), budget)


def ideal_contains_all(I: Ideal, gens) -> bool:
    return all(ideal_membership(g, I) for g in gens)


def radical_member(p: Polynomial, I: Ideal, budget: int = DEFAULT_BUDGET) -> bool:
    """p in rad(I), via 1 in I + <1 - t p>."""
    t = _fresh_name(I.ring)
    big = I.ring.extend([t])
    gens = [g.to_ring(big) for g in I.gens]
    gens.append(big.one() - big.gen(t) * p.to_ring(big))
    return groebner(Ideal(big, gens), budget=budget).is_unit()
