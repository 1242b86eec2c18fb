"""Acceptance criteria 1-9, each reported as one PASS/FAIL line.

The lines are printed as the tests run (visible with ``-s``) and collected
into the terminal summary by conftest.py.
"""

import math
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from algfam.asymptotics import (
    C1,
    C2,
    chisq_cdf,
    cone_law_cdf,
    ks_distance,
    limit_law_min_chisq,
    simulate_curve_lr,
    simulate_lr_ci,
)
from algfam.groebner import BudgetExceededError
from algfam.ideal import Ideal, PolyMatrix, count_solutions, determinant, groebner, ideal_membership, singular_locus
from algfam.mle import fa_critical_ideal, lr_stat_ci
from algfam.models import (
    CIStatement,
    DiscreteDomain,
    GaussianDomain,
    discrete_ci_ideal,
    discrete_marginalize,
    epsilon_counterexample,
    gaussian_ci_ideal,
    nonneg_rank3_evidence,
)
from algfam.poly import Ring
from conftest import S1, record_acceptance
from oracles import lr_two_branch_numeric, random_pd
from test_fa import S1_MLE, S2_HEYWOOD

pytestmark = pytest.mark.slow


def test_criterion_1_ci_ideal_and_singular_locus():
    t0 = time.perf_counter()
    d = GaussianDomain(3)
    I = gaussian_ci_ideal(CIStatement({1}, {2}, {3}), d)
    ok_ci = I.equals(Ideal(d.ring, ["s12*s33 - s13*s23"]))
    model = Ideal(d.ring, ["s12", "s12*s33 - s13*s23"])
    locus = singular_locus(model)
    members = all(ideal_membership(d.ring.parse(v), locus) for v in ("s12", "s13", "s23"))
    # and nothing more: the locus ideal is exactly <s12, s13, s23>
    exact = locus.equals(Ideal(d.ring, ["s12", "s13", "s23"]))
    dt = time.perf_counter() - t0
    ok = ok_ci and members and exact and dt < 1.0
    record_acceptance(1, ok, f"CI ideal exact={ok_ci}, locus = V(s12,s13,s23) {members and exact}, {dt:.2f}s")
    assert ok


def test_criterion_2_fa_s1(s1_report):
    rep = s1_report
    t = rep.tallies
    err = float(np.max(np.abs(rep.mle_sigma - S1_MLE)))
    imag_lower = all(c.loglik < rep.mle_loglik for c in rep.imaginary_sigma)
    ok = (t["solutions"] == 57 and t["feasible"] == 11 and t["distinct_sigma"] == 6
          and t.get("local-max", 0) == 2 and rep.verdict == "interior" and err <= 5e-4
          and t["imaginary_lambda"] == 10 and t["imaginary_sigma"] == 5 and imag_lower)
    record_acceptance(2, ok, f"57/{t['solutions']} solutions, {t['feasible']} feasible, "
                             f"{t['distinct_sigma']} Sigma, {t.get('local-max', 0)} local max, "
                             f"{t['imaginary_lambda']}->{t['imaginary_sigma']} imaginary (lower: {imag_lower}), "
                             f"max |MLE - table| {err:.1e}")
    assert ok


def test_criterion_3_fa_s2_heywood(s2_report):
    rep = s2_report
    t = rep.tallies
    err = float(np.max(np.abs(rep.mle_sigma - S2_HEYWOOD)))
    ok = (t["feasible"] == 11 and t["distinct_sigma"] == 6 and t.get("saddle", 0) == 6
          and rep.verdict == "boundary(1)" and err <= 5e-4)
    record_acceptance(3, ok, f"{t['feasible']} feasible, {t['distinct_sigma']} Sigma, "
                             f"{t.get('saddle', 0)} saddles, verdict {rep.verdict}, max err {err:.1e}")
    assert ok


C4_BUDGET = 600


def test_criterion_4_symbolic_count_stretch(s1_report):
    # stretch goal: a budgeted attempt that never blocks the suite
    t0 = time.perf_counter()
    try:
        G = groebner(fa_critical_ideal(S1, saturated=True, budget=C4_BUDGET), budget=C4_BUDGET)
        count = count_solutions(G)
        ok = count == s1_report.tallies["solutions"] == 57
        detail = f"symbolic count {count} (numeric {s1_report.tallies['solutions']})"
    except BudgetExceededError as exc:
        ok = False
        detail = f"not attained: {exc}; criterion 2 stands as the oracle (stretch, non-blocking)"
    record_acceptance(4, ok, f"{detail}, {time.perf_counter() - t0:.0f}s")


def test_criterion_5_lr_statistic():
    rng = np.random.default_rng(2024)
    worst = max(abs(lr_stat_ci(S).value - lr_two_branch_numeric(S)) for S in (random_pd(rng, 3) for _ in range(100)))
    zeros = []
    for _ in range(20):
        a, b, c = rng.uniform(1, 3, 3)
        r13, r23 = rng.uniform(-0.8, 0.8, 2)
        A13 = np.array([[a, 0, r13 * math.sqrt(a * c)], [0, b, 0], [r13 * math.sqrt(a * c), 0, c]])
        A23 = np.array([[a, 0, 0], [0, b, r23 * math.sqrt(b * c)], [0, r23 * math.sqrt(b * c), c]])
        zeros += [lr_stat_ci(A13).value, lr_stat_ci(A23).value]
    zmax = max(abs(z) for z in zeros)
    ok = worst < 1e-8 and zmax < 1e-12
    record_acceptance(5, ok, f"max |lr - numeric oracle| over 100 PD = {worst:.1e}; max on A13/A23 = {zmax:.1e}")
    assert ok


def test_criterion_6_singular_asymptotics():
    t0 = time.perf_counter()
    sing = simulate_lr_ci(np.eye(3), 1000, 20_000, seed=0)
    limit = limit_law_min_chisq(20_000, seed=1)
    ks_sing = ks_distance(sing, limit)
    smooth0 = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.0], [0.5, 0.0, 1.0]])
    smooth = simulate_lr_ci(smooth0, 1000, 20_000, seed=2)
    ks_smooth = ks_distance(smooth, lambda x: chisq_cdf(np.maximum(x, 0), 2))
    dt = time.perf_counter() - t0
    ok = ks_sing < 0.02 and ks_smooth < 0.02 and dt <= 300
    record_acceptance(6, ok, f"KS(n*lambda at I, W12+min(W13,W23)) = {ks_sing:.4f}; "
                             f"KS(smooth point, chi2_2) = {ks_smooth:.4f}; {dt:.0f}s")
    assert ok


def test_criterion_7_curves():
    # seeds fixed in advance: C1 seed 0; C2 seed 0 at n = 100^2, seed 100 at n = 100^3
    c1 = simulate_curve_lr(C1, 100**3, 5000, seed=0)
    ks1 = ks_distance(c1, cone_law_cdf, floor=1e-3)  # the cone law has an atom of 1/2 at 0
    a = simulate_curve_lr(C2, 100**2, 5000, seed=0)
    b = simulate_curve_lr(C2, 100**3, 5000, seed=100)
    ks2 = ks_distance(a, b)
    # threshold-free supplement: Welch z-score of the mean shift between the two n
    z = (b.mean() - a.mean()) / math.sqrt(a.samples.var(ddof=1) / len(a) + b.samples.var(ddof=1) / len(b))
    ok = ks1 < 0.03 and ks2 > 0.05
    record_acceptance(7, ok, f"C1 KS vs cone law = {ks1:.4f} (< 0.03); C2 KS(n=1e4, n=1e6) = {ks2:.4f} (> 0.05), "
                             f"mean shift z = {z:.1f}; C2 margin is small, see notes")
    assert ok


def test_criterion_8_marginalization_and_nmf():
    d = DiscreteDomain([3, 3, 2])
    J = discrete_marginalize(discrete_ci_ideal(CIStatement({1}, {2}, {3}), d), d)
    q = J.ring
    det = determinant(PolyMatrix([[q.gen(f"q{i}{j}") for j in (1, 2, 3)] for i in (1, 2, 3)]))
    both = ideal_membership(det, J) and all(ideal_membership(g, Ideal(q, [det])) for g in J.gens)
    Q = epsilon_counterexample(Fraction(1, 100))
    R = Ring(["e"])
    dq = determinant(PolyMatrix([[R.const(x) for x in row] for row in Q])).constant_value()
    rep = nonneg_rank3_evidence(Q, restarts=200, seed=0)
    ok = both and dq == 0 and rep.best_residual > 1e-6
    record_acceptance(8, ok, f"marginal ideal = <det> both ways: {both}; det(eps matrix) = {dq}; "
                             f"best NMF rank-3 residual over {rep.restarts} restarts = {rep.best_residual:.3g}")
    assert ok


def test_criterion_9_property_suites():
    here = Path(__file__).parent
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
         str(here / "test_properties.py"), str(here / "test_groebner.py")],
        capture_output=True, text=True, cwd=here.parent,
    )
    dt = time.perf_counter() - t0
    last = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0 and dt < 120
    record_acceptance(9, ok, f"property + Groebner suites: {last}")
    assert ok, proc.stdout[-3000:]
