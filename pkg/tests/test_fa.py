"""Factor-analysis case studies on the two 4x4 sample covariance matrices."""

import numpy as np
import pytest

from algfam.mle import fa_critical_system, fa_solve
from conftest import S1, S2, fa_report

pytestmark = pytest.mark.slow

S1_MLE = np.array([
    [13.0, 2.1242, 0.9870, 2.5876],
    [2.1242, 11.0, 0.8941, 2.3440],
    [0.9870, 0.8941, 9.0, 1.0891],
    [2.5876, 2.3440, 1.0891, 7.0],
])

S2_HEYWOOD = np.array([
    [31.0, 11.0, -1.0, 5.0],
    [11.0, 23.0, -0.3548, 1.7742],
    [-1.0, -0.3548, 7.0, -0.1613],
    [5.0, 1.7742, -0.1613, 7.0],
])


def test_s1_counts(s1_report):
    t = s1_report.tallies
    assert t["solutions"] == 57
    assert t["feasible"] == 11
    assert t["distinct_sigma"] == 6
    assert t.get("local-max", 0) == 2
    assert t["imaginary_lambda"] == 10 and t["imaginary_sigma"] == 5


def test_s1_interior_mle(s1_report):
    assert s1_report.verdict == "interior"
    np.testing.assert_allclose(s1_report.mle_sigma, S1_MLE, atol=5e-4)
    assert all(c.loglik < s1_report.mle_loglik for c in s1_report.imaginary_sigma)
    assert all(b.loglik < s1_report.mle_loglik for b in s1_report.boundary)


def test_s1_residuals_and_mirrors(s1_report):
    pts = s1_report.points
    assert all(c.residual < 1e-10 for c in pts)
    for c in pts:
        p = c.theta.size // 2
        mirror = np.concatenate([c.theta[:p], -c.theta[p:]])
        assert any(np.allclose(mirror, d.theta, rtol=1e-6, atol=1e-9) for d in pts)
    # exactly one sign-fixed point: lambda = 0
    zero_l = [c for c in pts if np.allclose(c.lam, 0, atol=1e-9)]
    assert len(zero_l) == 1


def test_s1_points_solve_cleared_system(s1_report):
    eqs = fa_critical_system(S1)
    for c in s1_report.feasible:
        vals = [abs(complex(e.evaluate(list(c.theta)))) for e in eqs]
        assert max(vals) < 1e-8


def test_s2_heywood(s2_report):
    t = s2_report.tallies
    assert t["solutions"] == 57
    assert t["feasible"] == 11 and t["distinct_sigma"] == 6
    assert t.get("saddle", 0) == 6
    assert s2_report.verdict == "boundary(1)"
    np.testing.assert_allclose(s2_report.mle_sigma, S2_HEYWOOD, atol=5e-4)
    np.testing.assert_allclose(s2_report.mle_sigma[0], S2[0], atol=1e-8)


def test_real_mode_finds_the_feasible_points(s1_report):
    pts, diag = fa_solve(S1, n_starts=2000, mode="real", seed=3)
    feas = [c for c in pts if c.kind not in ("complex", "infeasible")]
    assert len(feas) == s1_report.tallies["feasible"]


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
@pytest.mark.parametrize("name", ["S1", "S2"])
def test_distinct_sigma_seed_invariant(name, seed):
    base = fa_report(name, 0)
    other = fa_report(name, seed)
    assert other.tallies["distinct_sigma"] == base.tallies["distinct_sigma"] == 6
    assert other.verdict == base.verdict
    np.testing.assert_allclose(other.mle_sigma, base.mle_sigma, atol=1e-8)
