"""Gaussian likelihoods, the CI likelihood-ratio statistic, and factor-analysis MLE.

Log-likelihood convention: for a centered Gaussian sample with empirical
covariance S (1/n normalization) and concentration matrix K,

    loglik(K) = (n/2) * (log det K - tr(S K)),

i.e. the additive constant ``-(n p / 2) log(2 pi)`` is dropped.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from .ideal import DEFAULT_BUDGET, Ideal, PolyMatrix, determinant, saturate
from .models import DiscreteDomain, GaussianDomain, fa_concentration_matrix, fa_ring
from .poly import Polynomial, Ring, as_fraction
from .solve import Box, PolynomialSystem, damped_newton, dedupe, multistart_solve, sort_key

__all__ = [
    "NotPositiveDefiniteError",
    "ConvergenceError",
    "SampleStats",
    "empirical_stats",
    "is_positive_definite",
    "gaussian_loglik",
    "LRResult",
    "lr_stat_ci",
    "fa_critical_system",
    "fa_critical_ideal",
    "FAModel",
    "CriticalPoint",
    "classify_critical",
    "fa_hessian",
    "fa_solve",
    "BoundaryFit",
    "boundary_mle",
    "SolveReport",
    "global_mle_fa",
    "LagrangeSystem",
    "lagrange_system",
    "solve_lagrange",
]


class NotPositiveDefiniteError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# basic Gaussian quantities
# ---------------------------------------------------------------------------


@dataclass
class SampleStats:
    mean: np.ndarray
    S: np.ndarray
    n: int


def empirical_stats(data) -> SampleStats:
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise ValueError("data must be an n x p matrix")
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least two observations")
    mean = X.mean(axis=0)
    D = X - mean
    S = D.T @ D / n
    return SampleStats(mean, (S + S.T) / 2, n)


def _cholesky(K, tol=1e-10):
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(K, K.T, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(K).max())):
        raise NotPositiveDefiniteError("matrix is not symmetric")
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("matrix is not positive definite") from None
    if np.any(np.diag(L) ** 2 <= tol):
        raise NotPositiveDefiniteError("matrix is numerically singular")
    return L


def is_positive_definite(K, tol: float = 1e-10) -> bool:
    try:
        _cholesky(K, tol)
    except (NotPositiveDefiniteError, ValueError):
        return False
    return True


def gaussian_loglik(K, S, n=1) -> float:
    """(n/2)(log det K - tr(S K)); raises if K is not positive definite."""
    L = _cholesky(K)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return 0.5 * n * (logdet - float(np.sum(np.asarray(S, float) * np.asarray(K, float))))


# ---------------------------------------------------------------------------
# LR statistic for X1 _|_ X2  and  X1 _|_ X2 | X3
# ---------------------------------------------------------------------------


class LRResult(NamedTuple):
    value: float
    branch: str  # "A13" (X1 _|_ (X2,X3)) or "A23" (X2 _|_ (X1,X3))


def lr_stat_ci(S) -> LRResult:
    """Per-observation LR statistic for the union of X1_|_(X2,X3) and X2_|_(X1,X3).

    n times the returned value is the likelihood-ratio statistic.  Ties go
    to the A13 branch.
    """
    S = np.asarray(S, dtype=float)
    if S.shape != (3, 3):
        raise ValueError("S must be 3 x 3")
    _cholesky(S)
    s11, s22, s33 = S[0, 0], S[1, 1], S[2, 2]
    s12, s13, s23 = S[0, 1], S[0, 2], S[1, 2]
    d12 = s11 * s22 - s12 * s12
    s33_12 = np.linalg.det(S) / d12
    s33_1 = s33 - s13 * s13 / s11
    s33_2 = s33 - s23 * s23 / s22
    first = np.log(s11 * s22 / d12)
    a13 = np.log(s33_2 / s33_12)
    a23 = np.log(s33_1 / s33_12)
    if a13 <= a23:
        return LRResult(float(first + a13), "A13")
    return LRResult(float(first + a23), "A23")


# ---------------------------------------------------------------------------
# factor analysis: symbolic system
# ---------------------------------------------------------------------------


def _frac_matrix(S):
    return [[as_fraction(x) if not isinstance(x, float) else Fraction(x) for x in row] for row in S]


class FAModel:
    """One-factor model in concentration form K = diag(w) - l l^T.

    Holds the exact determinant, its partials and the entry-wise derivatives
    of K; everything numerical is evaluated from these.
    """

    def __init__(self, p: int):
        self.p = p
        self.ring = fa_ring(p)
        self.K = fa_concentration_matrix(p)
        self.det = determinant(self.K)
        self.ddet = [self.det.diff(v) for v in range(2 * p)]
        self.dK = [
            [[self.K[i, j].diff(v) for j in range(p)] for i in range(p)] for v in range(2 * p)
        ]

    def trace_terms(self, S):
        """tr(S dK/dtheta_v) as exact polynomials."""
        R = self.ring
        out = []
        for v in range(2 * self.p):
            t = R.zero()
            for i in range(self.p):
                for j in range(self.p):
                    e = self.dK[v][i][j]
                    if e:
                        t = t + e * S[j][i]
            out.append(t)
        return out

    def critical_system(self, S):
        S = _frac_matrix(S)
        return [dd - self.det * tr for dd, tr in zip(self.ddet, self.trace_terms(S))]

    def gradient(self, theta, S, n=1):
        """Gradient of gaussian_loglik in theta from the symbolic partials."""
        pt = list(theta)
        d = self.det.evaluate(pt)
        S = _frac_matrix(S)
        return np.array(
            [
                0.5 * n * (float(dd.evaluate(pt)) / float(d) - float(tr.evaluate(pt)))
                for dd, tr in zip(self.ddet, self.trace_terms(S))
            ]
        )


_FA_CACHE: dict = {}


def _fa_model(p: int) -> FAModel:
    if p not in _FA_CACHE:
        _FA_CACHE[p] = FAModel(p)
    return _FA_CACHE[p]


def fa_critical_system(S) -> list:
    """The 2p cleared critical equations d(det K)/d theta_v - det K * tr(S dK/d theta_v)."""
    S = _frac_matrix(S)
    p = len(S)
    if p < 2 or any(len(r) != p for r in S):
        raise ValueError("S must be square with p >= 2")
    return _fa_model(p).critical_system(S)


def fa_critical_ideal(S, saturated: bool = True, budget: int = DEFAULT_BUDGET) -> Ideal:
    """Ideal of the cleared critical equations, optionally saturated by det K.

    Saturation removes the solution components on det K = 0 that clearing
    denominators introduced; the count of standard monomials of the result
    is the number of complex critical points with multiplicity.
    """
    system = fa_critical_system(S)
    I = Ideal(system[0].ring, system)
    if saturated:
        I = saturate(I, _fa_model(len(S)).det, budget)
    return I


def fa_concentration(theta):
    theta = np.asarray(theta)
    p = theta.size // 2
    w, l = theta[:p], theta[p:]
    return np.diag(w) - np.outer(l, l)


def _uncleared_residual(theta, S):
    """max |(K^-1)_ii - s_ii|, |(K^-1 l - S l)_i| via Sherman-Morrison, in complex arithmetic."""
    theta = np.asarray(theta, dtype=complex)
    p = theta.size // 2
    w, l = theta[:p], theta[p:]
    u = l / w
    c = 1 - np.sum(l * u)
    Kinv = np.diag(1 / w) + np.outer(u, u) / c
    r1 = np.diag(Kinv) - np.diag(S)
    r2 = Kinv @ l - S @ l
    return float(np.max(np.abs(np.concatenate([r1, r2]))))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


def fa_hessian(theta, S, n=1):
    """Analytic Hessian of the log-likelihood in theta = (w, l)."""
    theta = np.asarray(theta, dtype=float)
    S = np.asarray(S, dtype=float)
    p = theta.size // 2
    l = theta[p:]
    K = fa_concentration(theta)
    Kinv = np.linalg.inv(K)
    E = np.eye(p)
    A = [np.outer(E[i], E[i]) for i in range(p)]
    A += [-(np.outer(E[i], l) + np.outer(l, E[i])) for i in range(p)]
    M = Kinv - S
    H = np.zeros((2 * p, 2 * p))
    KA = [Kinv @ a for a in A]
    for a in range(2 * p):
        for b in range(a, 2 * p):
            h = -np.sum(KA[a] * KA[b].T)
            if a >= p and b >= p:
                i, j = a - p, b - p
                h += -(M[i, j] + M[j, i])
            H[a, b] = H[b, a] = h
    return 0.5 * n * H


def classify_critical(theta, S, tol: float = 1e-7) -> str:
    """local-max / saddle / local-min / degenerate from the Hessian eigenvalues."""
    theta = np.asarray(theta)
    if np.iscomplexobj(theta):
        if np.max(np.abs(theta.imag)) > 1e-8 * max(1.0, np.max(np.abs(theta))):
            raise ValueError("theta is not real")
        theta = theta.real
    p = theta.size // 2
    if np.any(theta[:p] <= 0) or not is_positive_definite(fa_concentration(theta)):
        raise ValueError("theta is not feasible")
    ev = np.linalg.eigvalsh(fa_hessian(theta, S))
    if np.any(np.abs(ev) < tol):
        return "degenerate"
    if np.all(ev < 0):
        return "local-max"
    if np.all(ev > 0):
        return "local-min"
    return "saddle"


# ---------------------------------------------------------------------------
# factor analysis: numerical solving
# ---------------------------------------------------------------------------


@dataclass
class CriticalPoint:
    theta: np.ndarray
    residual: float
    sigma_inv: np.ndarray
    loglik: float | None
    kind: str
    hits: int = 1

    @property
    def omega(self):
        return self.theta[: self.theta.size // 2]

    @property
    def lam(self):
        return self.theta[self.theta.size // 2 :]

    @property
    def sigma(self):
        return np.linalg.inv(self.sigma_inv)

    def to_dict(self):
        def enc(a):
            a = np.asarray(a)
            if np.iscomplexobj(a):
                return {"re": a.real.tolist(), "im": a.imag.tolist()}
            return a.tolist()

        return {
            "theta": enc(self.theta),
            "residual": self.residual,
            "sigma_inv": enc(self.sigma_inv),
            "loglik": self.loglik,
            "kind": self.kind,
        }


def _vspace_F(S):
    d = np.diag(S)

    def F(v):
        psi = d - v * v
        w = v / psi
        return w @ S.T - (1 + np.sum(v * w, axis=1))[:, None] * v

    def J(v):
        p = v.shape[1]
        psi = d - v * v
        w = v / psi
        dd = (psi + 2 * v * v) / psi**2
        return (
            S[None] * dd[:, None, :]
            - v[:, :, None] * (w + dd * v)[:, None, :]
            - (1 + np.sum(v * w, axis=1))[:, None, None] * np.eye(p)
        )

    return F, J


def _v_to_theta(v, S):
    psi = np.diag(S) - v * v
    w = v / psi
    c = 1 / (1 + np.sum(v * w))
    return np.concatenate([1 / psi, np.sqrt(c + 0j) * w])


def _is_realish(x, tol=1e-8):
    x = np.asarray(x)
    return not np.iscomplexobj(x) or np.max(np.abs(x.imag)) <= tol * max(1.0, np.max(np.abs(x)))


def _seed_points(S, n_starts, mode, seed, chunk, threads):
    """Roots of the loading-space system, mapped to theta.

    The loading-space system G(v) = S (v/psi) - (1 + v.(v/psi)) v with
    psi = diag(S) - v^2 describes the same critical set through
    Sigma = diag(psi) + v v^T, with four unknowns instead of eight.
    """
    F, J = _vspace_F(S)
    d = np.diag(S)
    sd = np.sqrt(d)
    n_chunks = max(1, -(-n_starts // chunk))
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [min(chunk, n_starts - k * chunk) for k in range(n_chunks)]

    def run(k):
        rng = np.random.default_rng(children[k])
        p = S.shape[0]
        if mode == "complex":
            v0 = (rng.standard_normal((sizes[k], p)) + 1j * rng.standard_normal((sizes[k], p))) * sd
        else:
            v0 = rng.standard_normal((sizes[k], p)) * sd
        v, res = damped_newton(F, J, v0, iters=120, tol=1e-13)
        with np.errstate(all="ignore"):
            psi = d - v * v
            keep = (
                (res < 1e-9)
                & (np.max(np.abs(v), axis=1) < 1e4 * sd.max())
                & (np.min(np.abs(psi) / d, axis=1) > 1e-6)
            )
            v = v[keep]
            c_inv = 1 + np.sum(v * v / (d - v * v), axis=1)
            v = v[np.abs(c_inv) > 1e-8]
        return v

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(run, range(n_chunks)))
    else:
        parts = [run(k) for k in range(n_chunks)]
    vs = np.concatenate(parts) if parts else np.zeros((0, S.shape[0]))
    reps, hits = dedupe(vs, 1e-6)
    return [(_v_to_theta(v, S), h) for v, h in zip(reps, hits)]


def _classify_point(theta, S, tol):
    p = theta.size // 2
    if _is_realish(theta):
        th = np.real(theta)
        K = fa_concentration(th)
        if np.all(th[:p] > 0) and is_positive_definite(K):
            return th, K, gaussian_loglik(K, S), classify_critical(th, S, tol)
        return th, K, None, "infeasible"
    K = fa_concentration(theta)
    ll = None
    if _is_realish(K) and is_positive_definite(np.real(K)):
        ll = gaussian_loglik(np.real(K), S)
    return theta, K, ll, "complex"


def fa_solve(
    S,
    n_starts: int = 20000,
    mode: str = "complex",
    seed: int = 0,
    *,
    tol: float = 1e-10,
    hess_tol: float = 1e-7,
    chunk: int = 1000,
    threads: int = 1,
):
    """Critical points of the one-factor log-likelihood in theta = (w, l).

    Starting values come from the loading-space system; each candidate is
    polished by Newton's method on the cleared polynomial system, points
    with det K ~ 0 are discarded, and the rest are deduplicated.  In real
    mode only real starts are used.  Returns (points, diagnostics).
    """
    if mode not in ("real", "complex"):
        raise ValueError("mode must be 'real' or 'complex'")
    Sf = np.asarray(S, dtype=float)
    p = Sf.shape[0]
    system = PolynomialSystem(fa_critical_system(S))
    seeds = _seed_points(Sf, n_starts, mode, seed, chunk, threads)
    diag = {"starts": n_starts, "seed_roots": len(seeds), "rejected_det": 0, "rejected_residual": 0}
    if not seeds:
        diag["note"] = "no start converged"
        return [], diag
    X0 = np.array([t for t, _ in seeds], dtype=complex)
    X, _ = damped_newton(system, system.jacobian, X0, iters=20, tol=0.0)
    pts = []
    for x, (_, hits) in zip(X, seeds):
        if np.abs(np.linalg.det(fa_concentration(x))) <= 1e-8:
            diag["rejected_det"] += 1
            continue
        r = _uncleared_residual(x, Sf)
        if not np.isfinite(r) or r > tol:
            diag["rejected_residual"] += 1
            continue
        pts.append((x, r, hits))
    reps, _ = dedupe(pts, 1e-6, key=lambda t: t[0])
    # each root comes with its sign mirror (w, -l); record any that were not found independently
    found = [t[0] for t in reps]
    added = 0
    for x, r, h in list(reps):
        mirror = np.concatenate([x[:p], -x[p:]])
        if not any(np.linalg.norm(mirror - y) <= 1e-6 * np.linalg.norm(y) for y in found):
            found.append(mirror)
            reps.append((mirror, r, 0))
            added += 1
    diag["mirrors_added"] = added
    out = []
    for x, r, h in reps:
        th, K, ll, kind = _classify_point(x, Sf, hess_tol)
        out.append(CriticalPoint(th, r, K, ll, kind, h))
    out.sort(key=lambda c: sort_key(c.theta))
    return out, diag


def _distinct_matrices(points, tol=1e-6):
    reps, _ = dedupe(points, tol, key=lambda c: np.asarray(c.sigma_inv).ravel())
    return reps


# ---------------------------------------------------------------------------
# boundary (Heywood) fits in covariance form Sigma = diag(w) + l l^T
# ---------------------------------------------------------------------------


@dataclass
class BoundaryFit:
    index: int  # 0-based position of the zero uniqueness variance
    sigma: np.ndarray
    omega: np.ndarray
    lam: np.ndarray
    loglik: float
    grad_norm: float
    agreement: bool
    spread: float


def _cov_objective(S, zero_index):
    """Negative per-observation log-likelihood and its derivatives in the free parameters."""
    p = S.shape[0]
    free_w = [j for j in range(p) if j != zero_index]

    def unpack(x):
        w = np.zeros(p)
        w[free_w] = x[: p - 1]
        return w, x[p - 1 :]

    def sigma(x):
        w, l = unpack(x)
        return np.diag(w) + np.outer(l, l)

    def f(x):
        Sig = sigma(x)
        sign, logdet = np.linalg.slogdet(Sig)
        if sign <= 0:
            return np.inf
        return 0.5 * (logdet + np.trace(np.linalg.solve(Sig, S)))

    def dirs(x):
        _, l = unpack(x)
        E = np.eye(p)
        A = [np.outer(E[j], E[j]) for j in free_w]
        A += [np.outer(E[k], l) + np.outer(l, E[k]) for k in range(p)]
        return A

    def grad(x):
        Sig = sigma(x)
        P = np.linalg.inv(Sig)
        M = P - P @ S @ P
        return np.array([0.5 * np.sum(M * a) for a in dirs(x)])

    def hess(x):
        Sig = sigma(x)
        P = np.linalg.inv(Sig)
        Q = P @ S @ P
        M = P - Q
        A = dirs(x)
        m = len(A)
        H = np.zeros((m, m))
        PA = [P @ a for a in A]
        QA = [Q @ a for a in A]
        for a in range(m):
            for b in range(a, m):
                h = -0.5 * np.sum(PA[b] * PA[a].T) + np.sum(PA[b] * QA[a].T)
                if a >= p - 1 and b >= p - 1:
                    i, j = a - (p - 1), b - (p - 1)
                    h += 0.5 * (M[i, j] + M[j, i])
                H[a, b] = H[b, a] = h
        return H

    return f, grad, hess, sigma, unpack


def boundary_mle(S, zero_index: int, n: int = 1, starts: int = 8, seed: int = 0) -> BoundaryFit:
    """Maximize the likelihood over Sigma = diag(w) + l l^T with w[zero_index] = 0.

    Bound-constrained quasi-Newton from several seeded starts, then Newton
    polishing on the free coordinates until the gradient norm is below
    1e-10.  ``agreement`` reports whether all converged starts produced the
    same Sigma.
    """
    S = np.asarray(S, dtype=float)
    p = S.shape[0]
    if not 0 <= zero_index < p:
        raise IndexError("zero_index out of range")
    _cholesky(S)
    f, grad, hess, sigma, unpack = _cov_objective(S, zero_index)
    d = np.diag(S)
    rng = np.random.default_rng(np.random.SeedSequence([seed, zero_index]))
    bounds = [(0, None)] * (p - 1) + [(None, None)] * p
    fits = []
    for _ in range(starts):
        w0 = np.delete(d, zero_index) * rng.uniform(0.2, 0.8, p - 1)
        l0 = rng.standard_normal(p) * np.sqrt(d) * 0.5
        l0[zero_index] = np.sqrt(d[zero_index]) * rng.choice([-1, 1])
        res = minimize(f, np.concatenate([w0, l0]), jac=grad, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": 5000, "gtol": 1e-12, "ftol": 1e-15})
        x = _newton_polish(res.x, grad, hess, p - 1)
        fits.append((f(x), x))
    fits.sort(key=lambda t: t[0])
    best_f, best_x = fits[0]
    g = grad(best_x)
    active = [k for k in range(p - 1) if best_x[k] <= 1e-12]
    g_free = np.delete(g, active)
    gnorm = float(np.linalg.norm(g_free))
    if not np.isfinite(best_f) or gnorm > 1e-6:
        raise ConvergenceError(f"boundary fit did not converge (gradient norm {gnorm:.3g})")
    Sig = sigma(best_x)
    spread = max(np.max(np.abs(sigma(x) - Sig)) for fv, x in fits if fv - best_f < 1e-8) if fits else 0.0
    close = [np.max(np.abs(sigma(x) - Sig)) for _, x in fits]
    agreement = all(c <= 1e-6 * np.abs(Sig).max() for c in close)
    w, l = unpack(best_x)
    return BoundaryFit(zero_index, Sig, w, l, -n * best_f, gnorm, agreement, float(max(close)))


def _newton_polish(x, grad, hess, n_w, iters=50):
    """Newton on the free coordinates; uniqueness variances pinned at 0 stay there."""
    x = np.array(x, dtype=float)
    for _ in range(iters):
        g = grad(x)
        free = [k for k in range(len(x)) if k >= n_w or x[k] > 1e-12]
        gf = g[free]
        if np.linalg.norm(gf) < 1e-13:
            break
        H = hess(x)[np.ix_(free, free)]
        try:
            step = np.linalg.solve(H, -gf)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        while t > 1e-6:
            y = x.copy()
            y[free] += t * step
            if np.all(y[:n_w] >= 0) and np.linalg.norm(grad(y)[free]) < np.linalg.norm(gf):
                x = y
                break
            t /= 2
        else:
            break
    return x


# ---------------------------------------------------------------------------
# global verdict
# ---------------------------------------------------------------------------


@dataclass
class SolveReport:
    points: list
    distinct_sigma: list  # feasible CriticalPoints, one per induced Sigma
    tallies: dict
    imaginary: list  # purely imaginary l with real PD K
    imaginary_sigma: list
    boundary: list  # BoundaryFit per index
    verdict: str  # "interior", "boundary(i)" (1-based), or "undetermined"
    mle_sigma: np.ndarray | None
    mle_loglik: float | None
    diagnostics: dict = field(default_factory=dict)

    @property
    def feasible(self):
        return [c for c in self.points if c.kind not in ("complex", "infeasible")]

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "mle_sigma": None if self.mle_sigma is None else np.asarray(self.mle_sigma).tolist(),
            "mle_loglik": self.mle_loglik,
            "tallies": self.tallies,
            "distinct_sigma": [
                {"sigma": c.sigma.tolist(), "kind": c.kind, "loglik": c.loglik} for c in self.distinct_sigma
            ],
            "imaginary_sigma": [{"sigma": c.sigma.real.tolist(), "loglik": c.loglik} for c in self.imaginary_sigma],
            "boundary": [
                {"index": b.index + 1, "sigma": b.sigma.tolist(), "loglik": b.loglik, "agreement": b.agreement}
                for b in self.boundary
            ],
            "points": [c.to_dict() for c in self.points],
            "diagnostics": self.diagnostics,
        }


def _purely_imaginary_lambda(c: CriticalPoint, tol=1e-8):
    th = np.asarray(c.theta, dtype=complex)
    p = th.size // 2
    w, l = th[:p], th[p:]
    scale = max(1.0, np.max(np.abs(th)))
    return (
        np.max(np.abs(w.imag)) <= tol * scale
        and np.max(np.abs(l.real)) <= tol * scale
        and np.max(np.abs(l.imag)) > tol * scale
    )


def global_mle_fa(
    S,
    n_starts: int = 20000,
    seed: int = 0,
    *,
    boundary_starts: int = 8,
    chunk: int = 1000,
    threads: int = 1,
    expected_count: int | None = None,
) -> SolveReport:
    """Locate the global maximizer of the one-factor likelihood over the closed parameter space.

    Interior candidates are the feasible critical points; complex critical
    points with purely imaginary loadings and a real positive definite K
    are compared as well, and each of the p boundary classes w_i = 0 is
    fitted in covariance form.  ``expected_count`` (if given) is the known
    number of complex solutions; a shortfall yields an "undetermined"
    verdict instead of a guess.
    """
    Sf = np.asarray(S, dtype=float)
    _cholesky(Sf)
    p = Sf.shape[0]
    points, diag = fa_solve(S, n_starts, "complex", seed, chunk=chunk, threads=threads)
    feasible = [c for c in points if c.kind not in ("complex", "infeasible")]
    distinct = _distinct_matrices(feasible)
    imag = [c for c in points if c.kind == "complex" and c.loglik is not None and _purely_imaginary_lambda(c)]
    imag_distinct = _distinct_matrices(imag)
    tallies = {
        "solutions": len(points),
        "real": sum(1 for c in points if c.kind != "complex"),
        "feasible": len(feasible),
        "distinct_sigma": len(distinct),
        "imaginary_lambda": len(imag),
        "imaginary_sigma": len(imag_distinct),
    }
    for c in distinct:
        tallies[c.kind] = tallies.get(c.kind, 0) + 1
    boundary = [boundary_mle(Sf, i, starts=boundary_starts, seed=seed) for i in range(p)]

    maxima = [c for c in distinct if c.kind == "local-max"]
    best_int = max(maxima, key=lambda c: c.loglik) if maxima else None
    best_b = max(boundary, key=lambda b: b.loglik)
    complete = expected_count is None or len(points) == expected_count
    diag["complete"] = complete
    if not complete:
        verdict, mle_sigma, mle_ll = "undetermined", None, None
    elif best_int is not None and best_int.loglik >= best_b.loglik:
        verdict, mle_sigma, mle_ll = "interior", best_int.sigma, best_int.loglik
    else:
        verdict, mle_sigma, mle_ll = f"boundary({best_b.index + 1})", best_b.sigma, best_b.loglik
    # imaginary loadings give K = diag(w) + |l|^2-type matrices outside the model;
    # they are reported for comparison but do not enter the verdict
    if mle_ll is not None:
        diag["imaginary_above_mle"] = sum(1 for c in imag_distinct if c.loglik > mle_ll)
    return SolveReport(points, distinct, tallies, imag, imag_distinct, boundary, verdict, mle_sigma, mle_ll, diag)


# ---------------------------------------------------------------------------
# Lagrange systems for constrained MLE
# ---------------------------------------------------------------------------


@dataclass
class LagrangeSystem:
    ring: Ring
    equations: list
    primal: list  # names of the model coordinates
    multipliers: list
    nonzero: Polynomial  # solutions must avoid its zero set
    domain: object
    coordinates: str


def _adjugate(M: PolyMatrix):
    n = M.shape[0]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            rows = [r for r in range(n) if r != j]
            cols = [c for c in range(n) if c != i]
            minor = determinant(M.submatrix(rows, cols)) if n > 1 else M.rows[0][0].ring.one()
            adj[i][j] = minor if (i + j) % 2 == 0 else -minor
    return adj


def lagrange_system(I: Ideal, domain, data, coordinates: str = "covariance") -> LagrangeSystem:
    """Stationarity-plus-constraint equations for maximizing the likelihood on V(I).

    Gaussian: ``data`` is S; the ideal's variables are Sigma entries
    (``coordinates="covariance"``) or K entries (``"concentration"``).
    Discrete: ``data`` maps cells (tuples) or cell names to counts; the
    sum-to-one constraint is added.  Denominators (powers of det, or the
    cell probabilities) are cleared.
    """
    if isinstance(domain, GaussianDomain):
        return _lagrange_gaussian(I, domain, data, coordinates)
    if isinstance(domain, DiscreteDomain):
        return _lagrange_discrete(I, domain, data)
    raise TypeError(
        "likelihood equations are rational only in Gaussian covariance/concentration "
        "or discrete probability coordinates"
    )


def _multiplier_ring(base: Ring, k: int):
    names = [f"m{i}" for i in range(k)]
    while any(n in base.names for n in names):
        names = ["_" + n for n in names]
    return Ring(list(base.names) + names), names


def _lagrange_gaussian(I, d: GaussianDomain, S, coordinates):
    if coordinates not in ("covariance", "concentration"):
        raise ValueError("coordinates must be 'covariance' or 'concentration'")
    S = _frac_matrix(S)
    p = d.p
    gens = list(I.gens)
    R, mult = _multiplier_ring(d.ring, len(gens))
    M = PolyMatrix([[d.sigma(i, j).to_ring(R) for j in range(1, p + 1)] for i in range(1, p + 1)])
    det = determinant(M)
    adj = _adjugate(M)
    gens_R = [g.to_ring(R) for g in gens]
    mus = [R.gen(m) for m in mult]
    eqs = []
    names = []
    for i in range(p):
        for j in range(i, p):
            v = d.sigma(i + 1, j + 1).format()
            names.append(v)
            weight = 1 if i == j else 2
            if coordinates == "covariance":
                # d/dSigma of log det Sigma + tr(Sigma^-1 S) times det^2
                aSa = R.zero()
                for a in range(p):
                    for b in range(p):
                        if S[a][b]:
                            aSa = aSa + adj[i][a] * adj[b][j] * S[a][b]
                core = det * adj[i][j] - aSa
                scale = det * det
            else:
                # d/dK of log det K - tr(S K) times det
                core = adj[i][j] - det * S[i][j]
                scale = det
            lag = R.zero()
            for mu, g in zip(mus, gens_R):
                lag = lag + mu * g.diff(v)
            eqs.append(core * weight + scale * lag)
    eqs.extend(gens_R)
    return LagrangeSystem(R, eqs, names, mult, det, d, coordinates)


def _lagrange_discrete(I, d: DiscreteDomain, counts):
    gens = list(I.gens)
    R, mult = _multiplier_ring(d.ring, len(gens) + 1)
    mus = [R.gen(m) for m in mult]
    gens_R = [g.to_ring(R) for g in gens]
    N = {}
    for k, v in (counts.items() if isinstance(counts, dict) else zip(d.cells, np.ravel(counts))):
        name = k if isinstance(k, str) else d.cell_name(tuple(k))
        N[name] = as_fraction(v) if not isinstance(v, float) else Fraction(v)
    names = [d.cell_name(c) for c in d.cells]
    unknown = sorted(set(N) - set(names))
    if unknown:
        raise ValueError(f"counts for unknown cells {unknown} (cells are 1-based)")
    total = R.zero()
    for nm in names:
        total = total + R.gen(nm)
    eqs = []
    for nm in names:
        pvar = R.gen(nm)
        lag = mus[0]
        for mu, g in zip(mus[1:], gens_R):
            lag = lag + mu * g.diff(nm)
        # N_x / p_x + lag = 0, cleared by p_x
        eqs.append(R.const(N.get(nm, 0)) + pvar * lag)
    eqs.append(total - 1)
    eqs.extend(gens_R)
    nonzero = R.one()
    for nm in names:
        nonzero = nonzero * R.gen(nm)
    return LagrangeSystem(R, eqs, names, mult, nonzero, d, "probability")


def solve_lagrange(L: LagrangeSystem, data, n_starts: int = 200, seed: int = 0, spread: float = 0.5):
    """Real solutions of a Lagrange system with the primal part near the saturated fit.

    Returns a list of dicts {coordinate name: value} for the primal
    variables, restricted to points where ``L.nonzero`` does not vanish.
    """
    system = PolynomialSystem(L.equations)
    R = L.ring
    center = np.zeros(R.ngens)
    scale = np.ones(R.ngens)
    if isinstance(L.domain, GaussianDomain):
        S = np.asarray([[float(as_fraction(x)) if not isinstance(x, float) else x for x in r] for r in data])
        target = S if L.coordinates == "covariance" else np.linalg.inv(S)
        p = L.domain.p
        for i in range(p):
            for j in range(i, p):
                k = R.index(L.domain.sigma(i + 1, j + 1).format())
                center[k] = target[i, j]
                scale[k] = spread * np.sqrt(abs(target[i, i] * target[j, j]))
    else:
        total = float(sum(float(v) for v in (data.values() if isinstance(data, dict) else np.ravel(data))))
        for nm in L.primal:
            k = R.index(nm)
            center[k] = 1 / len(L.primal)
            scale[k] = spread / len(L.primal)
        for m in L.multipliers:
            scale[R.index(m)] = total
        center[R.index(L.multipliers[0])] = -total
    for m in L.multipliers:
        if isinstance(L.domain, GaussianDomain):
            scale[R.index(m)] = 1.0
    sols = multistart_solve(system, Box(center, scale), n_starts, "real", seed, tol=1e-8)
    out = []
    for s in sols:
        if abs(L.nonzero.evaluate(list(s.x))) <= 1e-8:
            continue
        out.append({nm: float(s.x[R.index(nm)]) for nm in L.primal})
    # multiplier values may differ while primal parts agree
    reps, _ = dedupe(out, 1e-6, key=lambda dct: np.array(list(dct.values())))
    return reps
