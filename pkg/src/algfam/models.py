"""Ideals of model invariants for conditional-independence and factor-analysis models."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .ideal import DEFAULT_BUDGET, Ideal, PolyMatrix, eliminate, minors
from .poly import Ring, as_fraction

__all__ = [
    "CIStatement",
    "GaussianDomain",
    "DiscreteDomain",
    "ModelSpec",
    "FactorAnalysisParams",
    "gaussian_ci_ideal",
    "discrete_ci_ideal",
    "model_ideal",
    "gaussian_marginalize",
    "discrete_marginalize",
    "epsilon_counterexample",
    "fa_concentration_matrix",
    "fa_ring",
    "nonneg_rank_evidence",
    "nonneg_rank3_evidence",
    "NonnegRankReport",
]


@dataclass(frozen=True)
class CIStatement:
    """X_A independent of X_B given X_C, with 1-based variable indices."""

    A: frozenset
    B: frozenset
    C: frozenset = frozenset()

    def __init__(self, A, B, C=()):
        A, B, C = frozenset(int(a) for a in A), frozenset(int(b) for b in B), frozenset(int(c) for c in C)
        if not A or not B:
            raise ValueError("A and B must be nonempty")
        if A & B or A & C or B & C:
            raise ValueError("A, B, C must be pairwise disjoint")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @classmethod
    def from_dict(cls, d) -> "CIStatement":
        return cls(d["A"], d["B"], d.get("C", ()))

    def to_dict(self):
        return {"A": sorted(self.A), "B": sorted(self.B), "C": sorted(self.C)}

    def indices(self):
        return self.A | self.B | self.C

    def __str__(self):
        def fmt(s):
            return ",".join(map(str, sorted(s)))

        base = f"{fmt(self.A)} _|_ {fmt(self.B)}"
        return base + (f" | {fmt(self.C)}" if self.C else "")


def _sigma_name(i: int, j: int, p: int) -> str:
    i, j = min(i, j), max(i, j)
    return f"s{i}{j}" if p < 10 else f"s{i}_{j}"


class GaussianDomain:
    """Covariance ring Q[s_ij : 1 <= i <= j <= p]; means are unconstrained and left out."""

    def __init__(self, p: int):
        if p < 1:
            raise ValueError("need at least one variable")
        self.p = p
        self.ring = Ring(
            [_sigma_name(i, j, p) for i in range(1, p + 1) for j in range(i, p + 1)]
        )

    def sigma(self, i: int, j: int):
        return self.ring.gen(_sigma_name(i, j, self.p))

    def sigma_matrix(self) -> PolyMatrix:
        return PolyMatrix(
            [[self.sigma(i, j) for j in range(1, self.p + 1)] for i in range(1, self.p + 1)]
        )

    def to_dict(self):
        return {"type": "gaussian", "p": self.p}

    def __repr__(self):
        return f"GaussianDomain(p={self.p})"

    def __eq__(self, other):
        return isinstance(other, GaussianDomain) and other.p == self.p

    def __hash__(self):
        return hash(("gaussian", self.p))


class DiscreteDomain:
    """Joint-probability ring with one symbol per cell of the m_1 x ... x m_p table."""

    def __init__(self, levels, prefix: str = "p"):
        self.levels = tuple(int(m) for m in levels)
        if not self.levels or min(self.levels) < 1:
            raise ValueError("levels must be positive")
        self.prefix = prefix
        self.cells = list(itertools.product(*[range(1, m + 1) for m in self.levels]))
        self.ring = Ring([self.cell_name(c) for c in self.cells])

    @property
    def p(self) -> int:
        return len(self.levels)

    def cell_name(self, cell) -> str:
        sep = "" if max(self.levels) < 10 else "_"
        return self.prefix + sep.join(str(i) for i in cell)

    def prob(self, cell):
        return self.ring.gen(self.cell_name(cell))

    def to_dict(self):
        return {"type": "discrete", "levels": list(self.levels)}

    def __repr__(self):
        return f"DiscreteDomain(levels={self.levels})"

    def __eq__(self, other):
        return isinstance(other, DiscreteDomain) and (other.levels, other.prefix) == (self.levels, self.prefix)

    def __hash__(self):
        return hash(("discrete", self.levels, self.prefix))


@dataclass
class ModelSpec:
    domain: object
    constraints: list = field(default_factory=list)

    @classmethod
    def from_dict(cls, d) -> "ModelSpec":
        dom = d["domain"]
        kind = dom.get("type", "gaussian")
        if kind == "gaussian":
            domain = GaussianDomain(int(dom["p"]))
        elif kind == "discrete":
            domain = DiscreteDomain(dom["levels"])
        else:
            raise ValueError(f"unknown domain type {kind!r}")
        cis = [CIStatement.from_dict(c) for c in d.get("ci", [])]
        spec = cls(domain, cis)
        spec.validate()
        return spec

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))

    def to_dict(self):
        return {"domain": self.domain.to_dict(), "ci": [c.to_dict() for c in self.constraints]}

    def validate(self):
        p = self.domain.p
        for s in self.constraints:
            bad = [i for i in s.indices() if not 1 <= i <= p]
            if bad:
                raise IndexError(f"statement {s} refers to variables {bad} outside 1..{p}")


@dataclass
class FactorAnalysisParams:
    omega: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        self.omega = np.asarray(self.omega)
        self.lam = np.asarray(self.lam)
        if self.omega.shape != self.lam.shape:
            raise ValueError("omega and lambda must have the same length")

    @property
    def theta(self):
        return np.concatenate([self.omega, self.lam])

    def concentration(self):
        return np.diag(self.omega) - np.outer(self.lam, self.lam)

    def covariance(self):
        return np.diag(self.omega) + np.outer(self.lam, self.lam)

    def is_interior(self) -> bool:
        return bool(np.all(np.isreal(self.omega)) and np.all(np.real(self.omega) > 0))


# ---------------------------------------------------------------------------
# CI ideals
# ---------------------------------------------------------------------------


def gaussian_ci_ideal(s: CIStatement, d: GaussianDomain) -> Ideal:
    """(|C|+1)-minors of the submatrix Sigma[A u C, B u C]."""
    p = d.p
    for i in s.indices():
        if not 1 <= i <= p:
            raise IndexError(f"variable {i} outside 1..{p}")
    rows = sorted(s.A) + sorted(s.C)
    cols = sorted(s.B) + sorted(s.C)
    sub = PolyMatrix([[d.sigma(i, j) for j in cols] for i in rows])
    gens = _dedupe(minors(sub, len(s.C) + 1))
    return Ideal(d.ring, gens)


def _dedupe(polys):
    seen, out = set(), []
    for f in polys:
        if not f:
            continue
        g = -f if f.leading_coefficient() < 0 else f
        if g not in seen:
            seen.add(g)
            out.append(g)
    return out


def _flat_levels(d: DiscreteDomain, idx):
    return list(itertools.product(*[range(1, d.levels[i - 1] + 1) for i in sorted(idx)]))


def discrete_ci_ideal(s: CIStatement, d: DiscreteDomain) -> Ideal:
    """2x2 minors of the (A-level x B-level) slice at each C-level.

    Compound A, B, C are flattened to single variables with product level
    sets; variables outside A u B u C are summed out.
    """
    p = d.p
    for i in s.indices():
        if not 1 <= i <= p:
            raise IndexError(f"variable {i} outside 1..{p}")
    A, B, C = sorted(s.A), sorted(s.B), sorted(s.C)
    rest = [i for i in range(1, p + 1) if i not in s.indices()]
    a_lv, b_lv, c_lv, r_lv = (_flat_levels(d, X) for X in (A, B, C, rest))

    def entry(a, b, c):
        total = d.ring.zero()
        for r in r_lv:
            cell = [0] * p
            for idx, val in zip(A, a):
                cell[idx - 1] = val
            for idx, val in zip(B, b):
                cell[idx - 1] = val
            for idx, val in zip(C, c):
                cell[idx - 1] = val
            for idx, val in zip(rest, r):
                cell[idx - 1] = val
            total = total + d.prob(cell)
        return total

    gens = []
    for c in c_lv:
        for a1, a2 in itertools.combinations(a_lv, 2):
            for b1, b2 in itertools.combinations(b_lv, 2):
                gens.append(entry(a1, b1, c) * entry(a2, b2, c) - entry(a1, b2, c) * entry(a2, b1, c))
    return Ideal(d.ring, gens)


def model_ideal(spec: ModelSpec) -> Ideal:
    spec.validate()
    d = spec.domain
    builder = gaussian_ci_ideal if isinstance(d, GaussianDomain) else discrete_ci_ideal
    gens = []
    for s in spec.constraints:
        gens.extend(builder(s, d).gens)
    return Ideal(d.ring, _dedupe(gens))


# ---------------------------------------------------------------------------
# marginalization
# ---------------------------------------------------------------------------


def gaussian_marginalize(I: Ideal, d: GaussianDomain, budget: int = DEFAULT_BUDGET) -> Ideal:
    """Invariants of the marginal of (X_1..X_{p-1}): eliminate every s_ip."""
    if I.ring != d.ring:
        raise ValueError("ideal does not live in the domain's ring")
    p = d.p
    drop = [_sigma_name(i, p, p) for i in range(1, p + 1)]
    J = eliminate(I, drop, budget)
    small = GaussianDomain(p - 1)
    mapping = {_sigma_name(i, j, p): _sigma_name(i, j, p - 1) for i in range(1, p) for j in range(i, p)}
    return Ideal(small.ring, [g.to_ring(small.ring, mapping) for g in J.gens])


def discrete_marginalize(I: Ideal, d: DiscreteDomain, budget: int = DEFAULT_BUDGET) -> Ideal:
    """Invariants of the marginal over the first p-1 variables.

    Adds q_{i1..i_{p-1}} - sum_j p_{i1..i_{p-1} j} and eliminates all p-symbols.
    """
    if I.ring != d.ring:
        raise ValueError("ideal does not live in the domain's ring")
    if d.p < 2:
        raise ValueError("need at least two variables to marginalize")
    qdom = DiscreteDomain(d.levels[:-1], prefix="q")
    big = Ring(d.ring.names + qdom.ring.names)
    gens = [g.to_ring(big) for g in I.gens]
    for cell in qdom.cells:
        q = big.gen(qdom.cell_name(cell))
        total = big.zero()
        for j in range(1, d.levels[-1] + 1):
            total = total + big.gen(d.cell_name(cell + (j,)))
        gens.append(q - total)
    J = eliminate(Ideal(big, gens), list(d.ring.names), budget)
    return Ideal(qdom.ring, [g.to_ring(qdom.ring) for g in J.gens])


def epsilon_counterexample(eps) -> list:
    """The 4x4 probability matrix of rank 3 that is not a CI marginal."""
    e = as_fraction(eps)
    if not 0 < e < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    one = Fraction(1)
    pattern = [
        [one, one, e, e],
        [e, one, one, e],
        [e, e, one, one],
        [one, e, e, one],
    ]
    scale = 1 / (8 * (1 + e))
    return [[x * scale for x in row] for row in pattern]


# ---------------------------------------------------------------------------
# factor analysis
# ---------------------------------------------------------------------------


def fa_ring(p: int) -> Ring:
    return Ring([f"w{i}" for i in range(1, p + 1)] + [f"l{i}" for i in range(1, p + 1)])


def fa_concentration_matrix(p: int) -> PolyMatrix:
    """diag(w) - l l^T over the ring Q[w1..wp, l1..lp]."""
    if p < 2:
        raise ValueError("factor analysis needs p >= 2")
    R = fa_ring(p)
    rows = []
    for i in range(1, p + 1):
        row = []
        for j in range(1, p + 1):
            e = -R.gen(f"l{i}") * R.gen(f"l{j}")
            if i == j:
                e = e + R.gen(f"w{i}")
            row.append(e)
        rows.append(row)
    return PolyMatrix(rows)


# ---------------------------------------------------------------------------
# nonnegative rank evidence
# ---------------------------------------------------------------------------


@dataclass
class NonnegRankReport:
    """Outcome of a multistart nonnegative factorization.

    ``best_residual`` is the smallest squared Frobenius error found.  A value
    bounded away from zero is evidence, not proof, that the matrix has
    nonnegative rank above ``rank``.
    """

    rank: int
    restarts: int
    seed: int
    best_residual: float
    residuals: list
    W: np.ndarray
    H: np.ndarray

    def to_dict(self):
        return {
            "rank": self.rank,
            "restarts": self.restarts,
            "seed": self.seed,
            "best_residual": self.best_residual,
            "median_residual": float(np.median(self.residuals)),
            "kind": "evidence",
        }


def _hals(X, W, H, iters, tol):
    """Hierarchical ALS, vectorized over a batch of restarts.

    W has shape (R, m, r) and H (R, r, n); each restart is updated
    independently, so the batch gives the same result as separate runs.
    """
    r = W.shape[2]
    prev = np.full(W.shape[0], np.inf)
    for it in range(iters):
        WtX = np.einsum("bmk,mn->bkn", W, X)
        WtW = np.einsum("bmk,bml->bkl", W, W)
        for k in range(r):
            num = WtX[:, k, :] - np.einsum("bl,bln->bn", WtW[:, k, :], H) + WtW[:, k, k, None] * H[:, k, :]
            H[:, k, :] = np.maximum(_TINY, num / np.maximum(WtW[:, k, k, None], _TINY))
        XHt = np.einsum("mn,bkn->bmk", X, H)
        HHt = np.einsum("bkn,bln->bkl", H, H)
        for k in range(r):
            num = XHt[:, :, k] - np.einsum("bml,bl->bm", W, HHt[:, :, k]) + W[:, :, k] * HHt[:, k, k, None]
            W[:, :, k] = np.maximum(_TINY, num / np.maximum(HHt[:, k, k, None], _TINY))
        if it % 50 == 49:
            res = np.sum((X - W @ H) ** 2, axis=(1, 2))
            # prev starts at inf; inf - x <= tol * inf would stop immediately
            done = np.isfinite(prev) & (prev - res <= tol * prev)
            if np.all(done | (res < 1e-28)):
                break
            prev = res
    return W, H, np.sum((X - W @ H) ** 2, axis=(1, 2))


_TINY = 1e-300


def nonneg_rank_evidence(q, rank: int = 3, restarts: int = 200, seed: int = 0, iters: int = 20000) -> NonnegRankReport:
    """Best squared residual of a nonnegative rank-``rank`` factorization of ``q``.

    Each restart draws its uniform starting factors from its own spawned
    seed, so results do not depend on batching.
    """
    X = np.array([[float(x) for x in row] for row in q])
    if np.any(X < 0):
        raise ValueError("matrix must be nonnegative")
    m, n = X.shape
    scale = np.sqrt(X.sum() / (m * n * rank * 0.25))
    W0, H0 = [], []
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        W0.append(rng.random((m, rank)) * scale)
        H0.append(rng.random((rank, n)) * scale)
    W, H, res = _hals(X, np.stack(W0), np.stack(H0), iters, 1e-14)
    k = int(np.argmin(res))
    return NonnegRankReport(rank, restarts, seed, float(res[k]), [float(r) for r in res], W[k], H[k])


def nonneg_rank3_evidence(q, restarts: int = 200, seed: int = 0) -> NonnegRankReport:
    return nonneg_rank_evidence(q, 3, restarts, seed)
