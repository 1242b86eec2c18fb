"""Buchberger's algorithm over Q.

The kernel works on plain dicts ``{exponent tuple: coefficient}`` with
``gmpy2.mpq`` coefficients when available.  Polynomials in the working basis
are kept monic so reduction steps never divide.
"""

from __future__ import annotations

import heapq
from fractions import Fraction

from .poly import GREVLEX, Polynomial, TermOrder

try:  # pragma: no cover - exercised implicitly
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

DEFAULT_BUDGET = 200_000


class BudgetExceededError(RuntimeError):
    """Gröbner computation stopped after processing ``budget`` S-pairs."""

    def __init__(self, budget: int, basis_size: int, pending: int):
        super().__init__(
            f"S-pair budget of {budget} exhausted "
            f"(basis size {basis_size}, {pending} pairs pending)"
        )
        self.budget = budget
        self.basis_size = basis_size
        self.pending = pending


def _to_kernel(p: Polynomial) -> dict:
    return {m: _Q(c.numerator, c.denominator) for m, c in p.terms.items()}


def _from_kernel(ring, terms: dict) -> Polynomial:
    return Polynomial(
        ring,
        {m: Fraction(int(c.numerator), int(c.denominator)) for m, c in terms.items()},
        _trusted=True,
    )


def _divides(a, b):
    for x, y in zip(a, b):
        if x > y:
            return False
    return True


def _lcm(a, b):
    return tuple(x if x > y else y for x, y in zip(a, b))


def _coprime(a, b):
    for x, y in zip(a, b):
        if x and y:
            return False
    return True


class _Kernel:
    """Shared state for one computation: order keys are memoised per monomial."""

    def __init__(self, order: TermOrder):
        self.order = order
        self._keys = {}

    def key(self, m):
        k = self._keys.get(m)
        if k is None:
            k = self.order.key(m)
            self._keys[m] = k
        return k

    def negkey(self, m):
        return tuple(-v for v in self.key(m))

    def lm(self, f: dict):
        return max(f, key=self.key)

    def make_monic(self, f: dict) -> dict:
        m = self.lm(f)
        c = f[m]
        if c == 1:
            return f
        inv = 1 / c
        return {k: v * inv for k, v in f.items()}

    def reduce(self, f: dict, basis, full: bool = True) -> dict:
        """Remainder of ``f`` on division by ``basis``.

        ``basis`` is a sequence of (lm, monic terms) pairs.  With
        ``full=False`` only leading terms are reduced.
        """
        p = dict(f)
        heap = [(self.negkey(m), m) for m in p]
        heapq.heapify(heap)
        rem = {}
        while heap:
            _, m = heapq.heappop(heap)
            c = p.pop(m, None)
            if c is None:
                continue
            for glm, g in basis:
                if _divides(glm, m):
                    q = tuple(a - b for a, b in zip(m, glm))
                    for gm, gc in g.items():
                        if gm == glm:
                            continue
                        nm = tuple(a + b for a, b in zip(gm, q))
                        v = p.get(nm)
                        if v is None:
                            p[nm] = -c * gc
                            heapq.heappush(heap, (self.negkey(nm), nm))
                        else:
                            v = v - c * gc
                            if v:
                                p[nm] = v
                            else:
                                del p[nm]
                    break
            else:
                rem[m] = c
                if not full:
                    rem.update(p)
                    return rem
        return rem

    def spoly(self, f, flm, g, glm) -> dict:
        lcm = _lcm(flm, glm)
        qf = tuple(a - b for a, b in zip(lcm, flm))
        qg = tuple(a - b for a, b in zip(lcm, glm))
        out = {}
        for m, c in f.items():
            if m == flm:
                continue
            out[tuple(a + b for a, b in zip(m, qf))] = c
        for m, c in g.items():
            if m == glm:
                continue
            nm = tuple(a + b for a, b in zip(m, qg))
            v = out.get(nm, 0) - c
            if v:
                out[nm] = v
            else:
                out.pop(nm, None)
        return out


def buchberger(generators, order: TermOrder = GREVLEX, budget: int = DEFAULT_BUDGET, strategy: str = "auto"):
    """Reduced Gröbner basis of kernel-form ``generators``.

    Returns a list of monic kernel dicts sorted by decreasing leading
    monomial.  Pairs are pruned with the Gebauer-Möller update, which
    implements the coprime (product) and chain criteria.  Selection is
    ``"sugar"`` (smallest sugar degree, ties by the order of the lcm) or
    ``"normal"`` (smallest lcm in the order); ``"auto"`` picks normal for
    lex, where sugar can wander through huge intermediate degrees, and
    sugar otherwise.
    """
    if strategy == "auto":
        strategy = "normal" if order.kind == "lex" else "sugar"
    if strategy not in ("normal", "sugar"):
        raise ValueError(f"unknown selection strategy {strategy!r}")
    use_sugar = strategy == "sugar"
    K = _Kernel(order)
    polys = []  # all basis elements ever added: (lm, terms)
    sugar = []  # sugar degree per element of polys
    active = []  # indices usable as reducers
    pairs = []  # heap of (sugar, key(lcm), i, j)
    processed = 0

    def reducers():
        return [polys[i] for i in active]

    def update(h_idx):
        nonlocal active, pairs
        hlm = polys[h_idx][0]
        # Gebauer-Moller: C holds unexamined (h, g) pairs, D the kept ones
        C = [(g, _lcm(hlm, polys[g][0])) for g in active]
        D = []
        while C:
            g1, l1 = C.pop(0)
            if _coprime(hlm, polys[g1][0]) or not any(
                _divides(l2, l1) for _, l2 in C + D
            ):
                D.append((g1, l1))
        keep = D
        new_pairs = [(g, l) for g, l in keep if not _coprime(hlm, polys[g][0])]
        # prune old pairs by the chain criterion through h
        survivors = []
        for item in pairs:
            _, _, i, j = item
            lij = _lcm(polys[i][0], polys[j][0])
            if (
                _divides(hlm, lij)
                and _lcm(polys[i][0], hlm) != lij
                and _lcm(polys[j][0], hlm) != lij
            ):
                continue
            survivors.append(item)
        for g, l in new_pairs:
            i, j = min(g, h_idx), max(g, h_idx)
            sg = max(
                sugar[i] + sum(l) - sum(polys[i][0]),
                sugar[j] + sum(l) - sum(polys[j][0]),
            )
            survivors.append((sg if use_sugar else 0, K.key(l), i, j))
        heapq.heapify(survivors)
        pairs = survivors
        active = [g for g in active if not _divides(hlm, polys[g][0])] + [h_idx]

    # seed with interreduced generators, smallest first for stability
    gens = [g for g in generators if g]
    gens.sort(key=lambda f: K.key(K.lm(f)))
    for f in gens:
        h = K.reduce(f, reducers())
        if not h:
            continue
        h = K.make_monic(h)
        polys.append((K.lm(h), h))
        sugar.append(max(sum(m) for m in f))
        update(len(polys) - 1)
        if not any(polys[-1][0]):
            break

    while pairs:
        if any(not any(polys[i][0]) for i in active):
            break  # unit ideal
        if processed >= budget:
            raise BudgetExceededError(budget, len(active), len(pairs))
        sg, _, i, j = heapq.heappop(pairs)
        processed += 1
        s = K.spoly(polys[i][1], polys[i][0], polys[j][1], polys[j][0])
        if not s:
            continue
        h = K.reduce(s, reducers())
        if not h:
            continue
        h = K.make_monic(h)
        polys.append((K.lm(h), h))
        sugar.append(sg)
        update(len(polys) - 1)

    return _interreduce(K, [polys[i] for i in active])


def _interreduce(K: _Kernel, basis):
    """Minimal, then fully reduced, monic basis sorted by decreasing lm."""
    for lm, f in basis:
        if not any(lm):
            return [{lm: _Q(1)}]
    basis = sorted(basis, key=lambda t: K.key(t[0]))
    minimal = []
    for lm, f in basis:
        if any(_divides(olm, lm) for olm, _ in minimal):
            continue
        minimal = [(olm, g) for olm, g in minimal if not _divides(lm, olm)]
        minimal.append((lm, f))
    out = []
    for idx, (lm, f) in enumerate(minimal):
        others = [t for k, t in enumerate(minimal) if k != idx]
        tail = {m: c for m, c in f.items() if m != lm}
        red = K.reduce(tail, others) if tail else {}
        red[lm] = f[lm]
        out.append(K.make_monic(red))
    out.sort(key=lambda f: K.key(K.lm(f)), reverse=True)
    return out


def kernel_reduce(f: dict, basis, order: TermOrder) -> dict:
    """Full remainder of ``f`` against monic ``basis`` dicts."""
    K = _Kernel(order)
    return K.reduce(f, [(K.lm(g), g) for g in basis])


def kernel_spolys_reduce_to_zero(basis, order: TermOrder) -> bool:
    K = _Kernel(order)
    red = [(K.lm(g), g) for g in basis]
    for a in range(len(red)):
        for b in range(a + 1, len(red)):
            (alm, f), (blm, g) = red[a], red[b]
            if _coprime(alm, blm):
                continue
            s = K.spoly(f, alm, g, blm)
            if s and K.reduce(s, red):
                return False
    return True
