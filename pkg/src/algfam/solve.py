"""Batched damped Newton for square or overdetermined polynomial systems."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .poly import Polynomial

__all__ = ["PolynomialSystem", "Box", "Solution", "damped_newton", "dedupe", "multistart_solve"]


class PolynomialSystem:
    """Float evaluation of a list of polynomials and their Jacobian, batched over rows."""

    def __init__(self, polys):
        polys = list(polys)
        if not polys:
            raise ValueError("empty system")
        self.ring = polys[0].ring
        self.polys = polys
        self.n = self.ring.ngens
        self.m = len(polys)
        self._f = [p.compile() for p in polys]
        self._df = [[p.diff(v).compile() for v in range(self.n)] for p in polys]

    @staticmethod
    def _eval(compiled, X):
        coef, exps = compiled
        if coef.size == 0:
            return np.zeros(X.shape[0], dtype=X.dtype)
        mons = np.prod(X[:, None, :] ** exps[None, :, :], axis=2)
        return mons @ coef

    def __call__(self, X):
        X = np.atleast_2d(X)
        return np.stack([self._eval(c, X) for c in self._f], axis=1)

    def jacobian(self, X):
        X = np.atleast_2d(X)
        J = np.empty((X.shape[0], self.m, self.n), dtype=np.result_type(X, float))
        for i, row in enumerate(self._df):
            for j, c in enumerate(row):
                J[:, i, j] = self._eval(c, X)
        return J


@dataclass
class Box:
    """Start region: ``center + scale * noise`` per coordinate.

    Real mode draws uniform noise in [-1, 1]; complex mode draws independent
    standard normal real and imaginary parts.
    """

    center: np.ndarray
    scale: np.ndarray

    def sample(self, rng, k: int, mode: str):
        c = np.asarray(self.center, dtype=float)
        s = np.asarray(self.scale, dtype=float)
        if mode == "real":
            return c + s * rng.uniform(-1, 1, size=(k, c.size))
        z = rng.standard_normal((k, c.size)) + 1j * rng.standard_normal((k, c.size))
        return c + s * z


@dataclass
class Solution:
    x: np.ndarray
    residual: float
    hits: int = 1
    meta: dict = field(default_factory=dict)


def damped_newton(F, J, X, iters: int = 80, tol: float = 1e-12, backtracks: int = 10):
    """Run damped Newton on every row of ``X`` simultaneously.

    ``F`` maps (B, n) -> (B, m) and ``J`` maps (B, n) -> (B, m, n).  Steps
    are halved until the residual norm decreases by the Armijo-like factor
    (1 - t/4).  Returns the final iterates and their residual norms; rows
    that blow up carry ``inf``.
    """
    X = np.array(X, copy=True)
    with np.errstate(all="ignore"):
        f = F(X)
        res = np.linalg.norm(f, axis=1)
        res[~np.isfinite(res)] = np.inf
        for _ in range(iters):
            active = np.isfinite(res) & (res > tol)
            if not active.any():
                break
            Xa, fa = X[active], f[active]
            Ja = J(Xa)
            ok = np.all(np.isfinite(Ja), axis=(1, 2))
            d = np.zeros_like(Xa)
            if ok.any():
                Jk, fk = Ja[ok], fa[ok]
                if Jk.shape[1] == Jk.shape[2]:
                    try:
                        d[ok] = np.linalg.solve(Jk, -fk[..., None])[..., 0]
                    except np.linalg.LinAlgError:
                        d[ok] = _lstsq_batch(Jk, -fk)
                else:
                    d[ok] = _lstsq_batch(Jk, -fk)
            d[~np.all(np.isfinite(d), axis=1)] = 0
            r0 = res[active]
            t = np.ones(len(Xa))
            accepted = np.zeros(len(Xa), bool)
            new_X, new_f, new_r = Xa.copy(), fa.copy(), r0.copy()
            for _ in range(backtracks):
                trial = Xa + t[:, None] * d
                ft = F(trial)
                rt = np.linalg.norm(ft, axis=1)
                good = ~accepted & np.isfinite(rt) & (rt < (1 - t / 4) * r0)
                new_X[good], new_f[good], new_r[good] = trial[good], ft[good], rt[good]
                accepted |= good
                if accepted.all():
                    break
                t = np.where(accepted, t, t / 2)
            # rows that found no descent take the smallest step anyway, to escape flat spots
            stuck = ~accepted
            if stuck.any():
                trial = Xa[stuck] + t[stuck, None] * d[stuck]
                ft = F(trial)
                rt = np.linalg.norm(ft, axis=1)
                rt[~np.isfinite(rt)] = np.inf
                new_X[stuck], new_f[stuck], new_r[stuck] = trial, ft, rt
            X[active], f[active], res[active] = new_X, new_f, new_r
    return X, res


def _lstsq_batch(J, b):
    JH = np.conj(np.swapaxes(J, 1, 2))
    A = JH @ J
    rhs = (JH @ b[..., None])[..., 0]
    A = A + 1e-14 * np.trace(A, axis1=1, axis2=2).real[:, None, None] * np.eye(A.shape[1])
    try:
        return np.linalg.solve(A, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.zeros_like(rhs)
        for k in range(len(A)):
            out[k] = np.linalg.lstsq(J[k], b[k], rcond=None)[0]
        return out


def _close(a, b, tol):
    return np.linalg.norm(a - b) <= tol * max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)


def dedupe(points, tol: float = 1e-6, key=None):
    """Greedy clustering at relative distance ``tol``.

    ``points`` is an iterable of arrays (or objects mapped to arrays by
    ``key``).  Returns representatives in first-seen order with hit counts.
    """
    key = key or (lambda p: p)
    reps, arrs, hits = [], [], []
    for p in points:
        a = np.asarray(key(p))
        if arrs:
            A = np.asarray(arrs)
            dist = np.linalg.norm(A - a, axis=1)
            scale = np.maximum(np.linalg.norm(A, axis=1), np.linalg.norm(a))
            idx = np.nonzero(dist <= tol * np.maximum(scale, 1e-300))[0]
            if idx.size:
                hits[idx[0]] += 1
                continue
        reps.append(p)
        arrs.append(a)
        hits.append(1)
    return reps, hits


def sort_key(x, digits: int = 8):
    x = np.asarray(x)
    return tuple(np.round(np.concatenate([x.real, np.imag(x)]), digits))


def multistart_solve(
    system,
    region: Box,
    n_starts: int = 1000,
    mode: str = "real",
    seed: int = 0,
    *,
    canonicalize=None,
    iters: int = 80,
    tol: float = 1e-10,
    dedup_tol: float = 1e-6,
    chunk: int = 500,
    threads: int = 1,
):
    """Seeded multistart Newton; returns deduped :class:`Solution` objects.

    Starts are split into chunks, each driven by its own child of
    ``SeedSequence(seed)``, so the output does not depend on ``threads``.
    ``canonicalize`` maps a solution to its representative under a known
    symmetry before deduplication.  ``residual`` is ``max |f_i|``.
    """
    if mode not in ("real", "complex"):
        raise ValueError("mode must be 'real' or 'complex'")
    if not isinstance(system, PolynomialSystem):
        system = PolynomialSystem(system)
    n_chunks = max(1, -(-n_starts // chunk))
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [min(chunk, n_starts - k * chunk) for k in range(n_chunks)]

    def run(k):
        rng = np.random.default_rng(children[k])
        X0 = region.sample(rng, sizes[k], mode)
        X, res = damped_newton(system, system.jacobian, X0, iters=iters, tol=tol * 1e-2)
        return X[res <= tol * 10]

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(run, range(n_chunks)))
    else:
        parts = [run(k) for k in range(n_chunks)]
    found = np.concatenate(parts) if parts else np.zeros((0, system.n))
    if canonicalize is not None:
        found = np.array([canonicalize(x) for x in found]).reshape(found.shape)
    if mode == "real":
        found = found.real if np.iscomplexobj(found) else found
    reps, hits = dedupe(found, dedup_tol)
    out = []
    for x, h in zip(reps, hits):
        r = float(np.max(np.abs(system(x[None])[0])))
        if r <= tol:
            out.append(Solution(x, r, h))
    out.sort(key=lambda s: sort_key(s.x))
    return out
