"""Monte Carlo for likelihood-ratio limits at smooth and singular points.

Random numbers: numpy ``Generator(PCG64)`` with its ziggurat normal
sampler.  Draws are made in fixed-size chunks, each seeded by a child of
``SeedSequence(seed)``, so output does not depend on the thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .mle import NotPositiveDefiniteError, is_positive_definite

__all__ = [
    "GENERATOR",
    "chisq_cdf",
    "EmpiricalDistribution",
    "limit_law_min_chisq",
    "sample_covariances",
    "lr_stat_ci_batch",
    "simulate_lr_ci",
    "CurveSpec",
    "C1",
    "C2",
    "curve_distance",
    "cone_distance",
    "cone_law_cdf",
    "simulate_curve_lr",
    "ks_distance",
    "ComparisonReport",
    "compare",
]

GENERATOR = "numpy.random.Generator(PCG64), ziggurat normals"
CHUNK = 10_000


def chisq_cdf(x, df):
    """Chi-square CDF through the regularized lower incomplete gamma function."""
    if df < 1:
        raise ValueError("df must be >= 1")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    out = special.gammainc(df / 2.0, x / 2.0)
    return float(out) if out.ndim == 0 else out


@dataclass
class EmpiricalDistribution:
    samples: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if s.size == 0:
            raise ValueError("empty sample")
        self.samples = s

    def __len__(self):
        return self.samples.size

    def cdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.samples.size

    def quantile(self, q):
        return np.quantile(self.samples, q)

    def mean(self) -> float:
        return float(self.samples.mean())

    def to_csv(self, path):
        np.savetxt(path, self.samples, fmt="%.17g", header="statistic", comments="")


def _chunked(reps, seed, fn, threads=1):
    """Call fn(rng, k) on chunks with per-chunk child seeds; concatenate in order."""
    n_chunks = max(1, -(-reps // CHUNK))
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [min(CHUNK, reps - i * CHUNK) for i in range(n_chunks)]

    def run(i):
        return fn(np.random.default_rng(children[i]), sizes[i])

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(run, range(n_chunks)))
    else:
        parts = [run(i) for i in range(n_chunks)]
    return np.concatenate(parts)


def limit_law_min_chisq(reps: int, seed: int = 0, threads: int = 1) -> EmpiricalDistribution:
    """Draws of W12 + min(W13, W23) with independent chi-square(1) W's."""
    if reps < 1:
        raise ValueError("reps must be >= 1")

    def draw(rng, k):
        z = rng.standard_normal((k, 3))
        w = z * z
        return w[:, 0] + np.minimum(w[:, 1], w[:, 2])

    vals = _chunked(reps, seed, draw, threads)
    return EmpiricalDistribution(vals, {"law": "W12+min(W13,W23)", "reps": reps, "seed": seed, "generator": GENERATOR})


# ---------------------------------------------------------------------------
# LR statistic under sampling
# ---------------------------------------------------------------------------


def _bartlett(rng, k, L, df):
    """k draws of L T T^T L^T / 1 with T the Bartlett factor of Wishart(df, I)."""
    p = L.shape[0]
    T = np.zeros((k, p, p))
    for i in range(p):
        T[:, i, i] = np.sqrt(rng.chisquare(df - i, size=k))
        if i:
            T[:, i, :i] = rng.standard_normal((k, i))
    LT = L[None] @ T
    return LT @ np.swapaxes(LT, 1, 2)


def sample_covariances(sigma0, n: int, reps: int, seed: int = 0, threads: int = 1):
    """Empirical covariance matrices (1/n) of n-samples from N(0, sigma0).

    Uses the Bartlett decomposition: n S ~ Wishart(n - 1, sigma0), which is
    exact in distribution when the mean is estimated.
    """
    sigma0 = np.asarray(sigma0, dtype=float)
    if not is_positive_definite(sigma0):
        raise NotPositiveDefiniteError("sigma0 is not positive definite")
    if n < sigma0.shape[0] + 1:
        raise ValueError("n too small for a nonsingular covariance")
    L = np.linalg.cholesky(sigma0)
    W = _chunked(reps, seed, lambda rng, k: _bartlett(rng, k, L, n - 1).reshape(k, -1), threads)
    return W.reshape(reps, *sigma0.shape) / n


def lr_stat_ci_batch(S):
    """Vectorized per-observation LR statistic (same formula as mle.lr_stat_ci)."""
    S = np.asarray(S, dtype=float)
    s11, s22, s33 = S[:, 0, 0], S[:, 1, 1], S[:, 2, 2]
    s12, s13, s23 = S[:, 0, 1], S[:, 0, 2], S[:, 1, 2]
    d12 = s11 * s22 - s12 * s12
    s33_12 = np.linalg.det(S) / d12
    first = np.log(s11 * s22 / d12)
    a13 = np.log((s33 - s23 * s23 / s22) / s33_12)
    a23 = np.log((s33 - s13 * s13 / s11) / s33_12)
    return first + np.minimum(a13, a23)


def simulate_lr_ci(sigma0, n: int, reps: int, seed: int = 0, threads: int = 1) -> EmpiricalDistribution:
    """Draws of n * lr_stat_ci(S) for S from n-samples of N(0, sigma0)."""
    if n < 10:
        raise ValueError("n must be >= 10")
    S = sample_covariances(sigma0, n, reps, seed, threads)
    vals = n * lr_stat_ci_batch(S)
    # the statistic is a likelihood ratio, so tiny negatives are rounding
    vals = np.maximum(vals, 0.0)
    meta = {
        "sigma0": np.asarray(sigma0, float).tolist(),
        "n": n,
        "reps": reps,
        "seed": seed,
        "generator": GENERATOR + "; Bartlett Wishart",
    }
    return EmpiricalDistribution(vals, meta)


# ---------------------------------------------------------------------------
# curve experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurveSpec:
    kind: str

    def __post_init__(self):
        if self.kind not in ("C1", "C2"):
            raise ValueError("curve kind must be 'C1' or 'C2'")

    @property
    def t_max(self) -> float:
        return math.inf if self.kind == "C1" else 3.0

    def __call__(self, t):
        """Second coordinate of the curve point with first coordinate t (t != 0)."""
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "C1":
                y = t * np.sin(1.0 / t)
            else:
                y = t * np.sin(-np.log(np.abs(t) / 4.0))
        return np.where(t == 0, 0.0, y)


C1 = CurveSpec("C1")
C2 = CurveSpec("C2")

# C1 near the origin: within one oscillation x moves by at most 2 pi x^2 / sqrt(n),
# so below this displacement the curve is treated as filling its cone.
_C1_FILL_TOL = 1e-5
_PER_TURN = 32
_MAX_GRID = 4_000_000


def _triangle_dist2(z, d):
    """Squared distance from z to the wedge piece {0 <= x <= d, |y| <= x}, and its mirror."""
    best = np.inf
    for s in (1.0, -1.0):
        x, y = s * z[0], z[1]
        if 0 <= x <= d and abs(y) <= x:
            return 0.0
        for a, b in (((0, 0), (d, d)), ((0, 0), (d, -d)), ((d, -d), (d, d))):
            a, b = np.array(a, float), np.array(b, float)
            ab = b - a
            t = np.clip(np.dot(np.array([x, y]) - a, ab) / np.dot(ab, ab), 0, 1)
            q = a + t * ab
            best = min(best, (x - q[0]) ** 2 + (y - q[1]) ** 2)
    return best


def _scaled_curve(curve, rn):
    def y(x):
        return rn * curve(x / rn)

    return y


def _grid(curve, rn, lo, hi, size):
    """Grid on lo <= x <= hi with x > 0, adapted to the oscillation of the curve."""
    if hi <= lo:
        return np.zeros(0)
    if curve.kind == "C1":
        # uniform in the phase rn / x, with enough points per oscillation to bracket every minimum
        turns = (rn / lo - rn / hi) / (2 * math.pi)
        size = min(max(size, int(_PER_TURN * turns)), _MAX_GRID)
        return rn / np.linspace(rn / hi, rn / lo, size)
    turns = math.log(hi / lo) / (2 * math.pi)
    size = min(max(size, int(_PER_TURN * turns)), _MAX_GRID)
    return np.geomspace(lo, hi, size)


def _y2_bound(curve: CurveSpec, rn: float, xmin):
    """Bound on |Y''| for the scaled curve Y(x) = rn c(x / rn) over |x| >= xmin."""
    if curve.kind == "C1":
        # Y = x sin(rn/x): Y'' = -(rn^2 / x^3) sin(rn/x)
        return rn * rn / xmin**3
    # Y = x sin(log(4 rn / |x|)): Y'' = -(cos L + sin L) / x
    return math.sqrt(2.0) / xmin


def _golden_batch(f, a, b, iters: int = 90):
    """Vectorized golden-section search of f on the intervals [a_k, b_k]."""
    g = (math.sqrt(5.0) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c_new = np.where(left, b - g * (b - a), d)
        d_new = np.where(left, c, a + g * (b - a))
        fc_new = np.where(left, f(c_new), fd)
        fd_new = np.where(left, fc, f(d_new))
        c, d, fc, fd = c_new, d_new, fc_new, fd_new
    return np.minimum(np.minimum(fc, fd), np.minimum(f(a), f(b)))


def curve_distance(curve: CurveSpec, n: float, z, grid: int = 100_000, refine: int = 4096) -> float:
    """min over the curve of ||z - sqrt(n) c||^2, origin included.

    Only |x - z1| <= ||z|| can beat the origin, which bounds the window.  A
    dense grid (phase-uniform for C1, log-uniform for C2) is laid over the
    window.  On each grid segment the curve stays within h^2 max|Y''| / 8 of
    its chord, which gives a lower bound on the distance there; every
    segment whose bound beats the best value found so far is searched by
    golden section (at most ``refine`` segments, smallest bounds first).
    """
    z = np.asarray(z, dtype=float)
    rn = math.sqrt(n)
    r = float(np.hypot(z[0], z[1]))
    best = r * r
    if r == 0:
        return 0.0
    y = _scaled_curve(curve, rn)
    lo, hi = z[0] - r, z[0] + r
    xmax = curve.t_max * rn
    if curve.kind == "C1":
        inner = math.sqrt(_C1_FILL_TOL * rn / (2 * math.pi))
        best = min(best, _triangle_dist2(z, inner))
    else:
        inner = 1e-9 * max(r, 1.0)
    pieces = []
    for sgn in (1.0, -1.0):
        a = max(inner, lo) if sgn > 0 else max(inner, -hi)
        b = min(xmax, hi) if sgn > 0 else min(xmax, -lo)
        if b > a:
            xs = np.sort(sgn * _grid(curve, rn, a, b, grid // 2))
            if xs.size >= 2:
                pieces.append((xs, y(xs)))
    if not pieces:
        return best

    def d2(x):
        return (z[0] - x) ** 2 + (z[1] - y(x)) ** 2

    segs = []
    for xs, ys in pieces:
        best = min(best, float(np.min((z[0] - xs) ** 2 + (z[1] - ys) ** 2)))
        ax, ay = xs[:-1], ys[:-1]
        bx, by = np.diff(xs), np.diff(ys)
        ll = bx * bx + by * by
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(ll > 0, np.clip(((z[0] - ax) * bx + (z[1] - ay) * by) / ll, 0.0, 1.0), 0.0)
        chord = np.sqrt((z[0] - ax - t * bx) ** 2 + (z[1] - ay - t * by) ** 2)
        xmin = np.minimum(np.abs(xs[:-1]), np.abs(xs[1:]))
        sag = bx * bx / 8.0 * _y2_bound(curve, rn, xmin)
        lb = np.maximum(chord - sag, 0.0) ** 2
        segs.append((ax, xs[1:], lb))
    A = np.concatenate([s[0] for s in segs])
    B = np.concatenate([s[1] for s in segs])
    LB = np.concatenate([s[2] for s in segs])
    cand = np.nonzero(LB < best)[0]
    if cand.size > refine:
        cand = cand[np.argpartition(LB[cand], refine - 1)[:refine]]
    if cand.size:
        best = min(best, float(np.min(_golden_batch(d2, A[cand], B[cand]))))
    return max(best, 0.0)


def cone_distance(z) -> float:
    """Squared distance from z to the cone {|mu2| <= |mu1|}."""
    z1, z2 = abs(float(z[0])), abs(float(z[1]))
    if z2 <= z1:
        return 0.0
    return (z2 - z1) ** 2 / 2.0


class ConeLaw:
    """Law of cone_distance(Z) for Z standard bivariate normal.

    With a = (z1 + z2)/sqrt2 and b = (z2 - z1)/sqrt2 independent N(0,1), the
    distance is min(a^2, b^2) when ab > 0 and 0 otherwise, so
    P(D > x) = (1 - F_1(x))^2 / 2 with F_1 the chi-square(1) CDF.  The law
    has an atom of mass 1/2 at zero.
    """

    atoms = (0.0,)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < 0, 0.0, 1.0 - 0.5 * (1.0 - special.gammainc(0.5, np.maximum(x, 0) / 2.0)) ** 2)
        return float(out) if out.ndim == 0 else out

    def left(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x <= 0, 0.0, self(x))
        return float(out) if out.ndim == 0 else out


cone_law_cdf = ConeLaw()


def simulate_curve_lr(curve: CurveSpec, n: float, reps: int, seed: int = 0, threads: int = 1,
                      grid: int = 100_000) -> EmpiricalDistribution:
    """Draws of the squared distance from a standard normal z to sqrt(n) C."""
    Z = _chunked(reps, seed, lambda rng, k: rng.standard_normal((k, 2)), 1)

    def work(block):
        return np.array([curve_distance(curve, n, z, grid) for z in block])

    blocks = np.array_split(Z, max(1, threads * 4))
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            vals = np.concatenate(list(ex.map(work, blocks)))
    else:
        vals = np.concatenate([work(b) for b in blocks])
    meta = {"curve": curve.kind, "n": n, "reps": reps, "seed": seed, "grid": grid, "generator": GENERATOR}
    return EmpiricalDistribution(vals, meta)


def _ecdf_sup(x, other_right, other_left, floor):
    """sup over t >= floor of |F_x(t) - G(t)| with G given by right/left limits at points."""
    x = np.sort(np.asarray(x, dtype=float))
    N = x.size
    u, counts = np.unique(x, return_counts=True)
    cum = np.cumsum(counts)
    right = cum / N
    left = (cum - counts) / N
    mask = u >= floor
    d = 0.0
    if mask.any():
        d = max(
            np.max(np.abs(right[mask] - other_right(u[mask]))),
            np.max(np.abs(left[mask] - other_left(u[mask]))),
        )
    if floor > -np.inf:
        e = np.searchsorted(x, floor, side="right") / N
        d = max(d, abs(e - float(other_right(np.array([floor]))[0])))
    return float(d)


def ks_distance(a, b, floor: float = -np.inf) -> float:
    """Kolmogorov-Smirnov distance between an empirical law and a sample or CDF.

    ``b`` is an EmpiricalDistribution / array (two-sample statistic) or a
    callable CDF; callables may expose ``left(x)`` for left limits at atoms.
    With ``floor`` set the supremum is taken over t >= floor only, which
    compares limits that carry an atom below ``floor`` on their continuity
    points.
    """
    xa = a.samples if isinstance(a, EmpiricalDistribution) else np.asarray(a, dtype=float)
    if xa.size == 0:
        raise ValueError("empty sample")
    if callable(b) and not isinstance(b, (EmpiricalDistribution, np.ndarray)):
        right = lambda t: np.asarray(b(t), dtype=float)  # noqa: E731
        left = getattr(b, "left", right)
        return _ecdf_sup(xa, right, lambda t: np.asarray(left(t), dtype=float), floor)
    xb = b.samples if isinstance(b, EmpiricalDistribution) else np.sort(np.asarray(b, dtype=float))
    if xb.size == 0:
        raise ValueError("empty sample")
    xb = np.sort(xb)
    Nb = xb.size

    def rb(t):
        return np.searchsorted(xb, t, side="right") / Nb

    def lb(t):
        return np.searchsorted(xb, t, side="left") / Nb

    d1 = _ecdf_sup(xa, rb, lb, floor)
    xa_s = np.sort(xa)
    Na = xa_s.size
    d2 = _ecdf_sup(
        xb,
        lambda t: np.searchsorted(xa_s, t, side="right") / Na,
        lambda t: np.searchsorted(xa_s, t, side="left") / Na,
        floor,
    )
    return max(d1, d2)


@dataclass
class ComparisonReport:
    ks: float
    quantiles: list  # (q, sample quantile, reference quantile or None)
    sizes: tuple
    floor: float | None = None

    def to_dict(self):
        return {"ks": self.ks, "quantiles": self.quantiles, "sizes": list(self.sizes), "floor": self.floor}


def compare(a: EmpiricalDistribution, b, floor: float = -np.inf,
            qs=(0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)) -> ComparisonReport:
    ks = ks_distance(a, b, floor)
    if isinstance(b, EmpiricalDistribution):
        quant = [(q, float(a.quantile(q)), float(b.quantile(q))) for q in qs]
        sizes = (len(a), len(b))
    else:
        quant = [(q, float(a.quantile(q)), None) for q in qs]
        sizes = (len(a),)
    return ComparisonReport(ks, quant, sizes, None if floor == -np.inf else floor)
