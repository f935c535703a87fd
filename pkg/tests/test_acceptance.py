"""Acceptance criteria, each run at its stated tolerance.

Every criterion prints one PASS/FAIL line (visible with ``pytest -s`` and in
the terminal summary). Run directly with ``python tests/test_acceptance.py``.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from critmass import criteria as cr
from critmass.initdata import DataSpec, barenblatt_exact, make, negative_energy_pair
from critmass.model import Parameters
from critmass.radial import (RadialDensity, RadialGrid, interaction_energy,
                             newtonian_potential, second_moment)
from critmass.solver import SolverConfig, StopReason, run
from critmass.variational import (ObjectiveSpec, alpha_interval, beta_from_alpha,
                                  estimate_constant)

pytestmark = pytest.mark.slow

P3 = Parameters.intersection(3)
MU = 0.35
RESULTS = {}


def report(num, ok, text):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {text}"
    RESULTS[num] = line
    sys.__stdout__.write(line + "\n")
    sys.__stdout__.flush()
    assert ok, line


def rel(a, b):
    return abs(a - b) / abs(b)


def le(a, ea, b, eb):
    # a <= b unless the error bars exclude it
    return a <= b + ea + eb


@pytest.fixture(scope="module")
def constants():
    out = {"CStar": estimate_constant(ObjectiveSpec.cstar(), n=512),
           "Lambda": estimate_constant(ObjectiveSpec.lam(P3), n=512)}
    for t in (0.3, 0.5, 0.7):
        out[t] = estimate_constant(ObjectiveSpec.pi(t), n=512)
    return out


@pytest.fixture(scope="module")
def dichotomy(constants):
    C = constants["CStar"]
    Mcrit = cr.critical_mass_equal(C.constant, P3)
    runs = {}
    for n in (256, 512):
        g = RadialGrid.uniform(n, 10.0, 3)
        cfg = SolverConfig(P3, g, t_end=1.0, dt_init=1e-2, diag_every=20)
        M = 0.5 * Mcrit
        u = make(DataSpec.rescaled_maximizer(C.h1, MU, M), g)
        runs[n, "sub"] = run(u, u, cfg)
        u1, u2, _ = negative_energy_pair(1.5 * Mcrit, 1.5 * Mcrit, C, MU, g, P3)
        runs[n, "super"] = run(u1, u2, cfg)
    return Mcrit, runs


@pytest.fixture(scope="module")
def virial_runs():
    Mcrit = cr.critical_mass_equal(2.1836343715724618, P3)
    res = []
    trajs = []
    for n in (128, 256, 512):
        g = RadialGrid.uniform(n, 10.0, 3)
        u = make(DataSpec.gaussian(0.5, 0.5 * Mcrit), g)
        tr = run(u, u, SolverConfig(P3, g, t_end=0.05, dt_init=1e-3, diag_every=10))
        trajs.append(tr)
        res.append(tr.virial_residual())
    return res, trajs


def test_criterion_1_conservation(dichotomy, virial_runs):
    _, runs = dichotomy
    residuals, vtrajs = virial_runs
    trajs = list(runs.values()) + vtrajs
    drift = max(t.mass_drift for t in trajs)
    viol = sum(t.energy_violations for t in trajs)
    ok = drift <= 1e-10 and viol == 0 and residuals[-1] <= 0.01
    report(1, ok, f"max mass drift {drift:.2e} (<=1e-10), energy violations {viol}, "
                  f"virial residual n=128/256/512 {[f'{r:.2e}' for r in residuals]} (<=1e-2)")


def test_criterion_2_oracles():
    g = RadialGrid.uniform(512, 4.0, 3)
    M, R = 1.0, 1.0
    ball = make(DataSpec.ball(R, M), g)
    v0 = float(newtonian_potential(ball, P3.c_d).v[0])
    H = interaction_energy(ball, ball)
    S = second_moment(ball, RadialDensity.zeros(g))
    e_v = rel(v0, 3 * M / (8 * math.pi * R))
    e_h = rel(H, 6 / 5 * M ** 2 / R)
    e_s = rel(S, 3 / 5 * M * R ** 2)
    m, t0 = 2.0, 0.1
    gb = RadialGrid.uniform(512, 4.0, 3)
    u0 = make(DataSpec.barenblatt(m, t0, 1.0), gb)
    tr = run(u0, RadialDensity.zeros(gb),
             SolverConfig(Parameters(3, m, m), gb, t_end=t0, dt_init=1e-3, diag_every=100))
    exact = barenblatt_exact(m, 2 * t0, 1.0, gb)
    l1 = float(np.dot(np.abs(tr.final.u1.values - exact.values), gb.w))
    ok = max(e_v, e_h, e_s) <= 2e-3 and l1 <= 0.01
    report(2, ok, f"ball v(0) {e_v:.1e}, H {e_h:.1e}, S {e_s:.1e} (<=2e-3); "
                  f"Barenblatt L1 {l1:.1e} (<=1e-2)")


def test_criterion_3_constant_orderings(constants, cstar_oracle):
    C, L = constants["CStar"], constants["Lambda"]
    c, ec = C.constant, C.error_bar
    lv, el = L.constant, L.error_bar
    parts, ok = [], True
    for t in (0.3, 0.5, 0.7):
        pi = constants[t]
        pv, ep = pi.constant, pi.error_bar
        M1 = (t / (1 - t)) ** (1 / P3.m_star)
        ub = cr.pi_upper_bound(M1, 1.0, lv, 1 / 3, 1 / 3, P3)
        ok &= le(c, ec, pv, ep) and le(pv, ep, ub, el)
        parts.append(f"Pi({t})={pv:.6f}±{ep:.1e} bound {ub:.4f}")
    half = rel(constants[0.5].constant, c)
    ok &= half <= 0.01 and le(c, ec, lv, el)
    report(3, ok, f"C*={c:.6f}±{ec:.1e} (Lane-Emden {cstar_oracle:.6f}), "
                  f"Lambda*={lv:.6f}±{el:.1e}, " + ", ".join(parts)
                  + f", |Pi(0.5)-C*|/C*={half:.1e}")


def test_criterion_4_dichotomy(dichotomy):
    Mcrit, runs = dichotomy
    ok, parts = True, []
    ms = P3.m_star
    for n in (256, 512):
        sub, sup = runs[n, "sub"], runs[n, "super"]
        norm = sub.series("lm1") ** (1 / ms)
        growth = float(norm.max() / norm[0])
        sub_ok = (sub.stop_reason in (StopReason.TIME_REACHED, StopReason.STEADY)
                  and growth < 2.0)
        S = sup.series("S")
        sup_ok = sup.stop_reason is StopReason.BLOWUP and bool(np.all(np.diff(S) < 0))
        ok &= sub_ok and sup_ok
        parts.append(f"n={n}: 0.5Mc {sub.stop_reason.value} norm ratio {growth:.3f}; "
                     f"1.5Mc {sup.stop_reason.value} at t={sup.final.t:.4f}, "
                     f"S decreasing={bool(np.all(np.diff(S) < 0))}")
    report(4, ok, f"M_crit={Mcrit:.4f}; " + "; ".join(parts))


def _boundary_norm_m1(M1, M2, n2, p, a, b):
    l0, rhs = cr.critical_identity_sides(M1, M2, 0.0, n2, p, a, b, 1.0)
    l1, _ = cr.critical_identity_sides(M1, M2, 1.0, n2, p, a, b, 1.0)
    return (rhs - l0) / (l1 - l0)


def test_criterion_5_bookkeeping():
    M1, M2, n2 = 2.0, 3.0, 1.7
    outcomes = []
    # the stated point lies outside the p>=1, q>=1, r>1 region; run it with the regime gate off
    p = Parameters(3, 1.5, 1.25)
    a = 0.55
    b = beta_from_alpha(a, p)
    n1 = _boundary_norm_m1(M1, M2, n2, p, a, b)
    res = cr.critical_identity_residual(M1, M2, n1, n2, p, a, b, 1.0, check_regime=False)
    v = cr.theorem12_verdict(M1, M2, n1, n2, -1.0, p, a, b, 1.0, check_regime=False)
    outcomes.append(v.outcome is cr.Outcome.BOUNDARY and v.evidence["boundary_all_theta"])
    q = Parameters(3, 1.3, 1.2)
    aq = 0.5 * alpha_interval(q)[0]
    bq = beta_from_alpha(aq, q)
    n1q = _boundary_norm_m1(M1, M2, n2, q, aq, bq)
    vq = cr.theorem12_verdict(M1, M2, n1q, n2, -1.0, q, aq, bq, 1.0)
    outcomes.append(vq.outcome is cr.Outcome.BOUNDARY and vq.evidence["boundary_all_theta"])

    rng = np.random.default_rng(2024)
    worst_k = worst_f = 0.0
    count = 0
    while count < 1000:
        m1, m2 = rng.uniform(1.05, 4 / 3, size=2)
        pp = Parameters(3, float(m1), float(m2))
        if pp.is_intersection or not cr.in_region_one_six(pp):
            continue
        al = float(rng.uniform(0.02, 0.98) * alpha_interval(pp)[0])
        try:
            be = beta_from_alpha(al, pp)
            cr.check_alpha_beta(al, be, pp)
        except Exception:
            continue
        s = cr.exponent_sum(al, be, pp)
        if s <= 1 + 1e-6:
            continue
        th = float(rng.uniform(0.01, 0.99))
        k1, k2 = cr.kappas(th, pp)
        prod = k1 * k2
        worst_k = max(worst_k, abs(prod - pp.c_d * (pp.m1 - 1) * th * k1 ** pp.m1) / prod,
                      abs(prod - pp.c_d * (pp.m2 - 1) * (1 - th) * k2 ** pp.m2) / prod)
        lt = cr.lambda_theta(float(rng.uniform(0.2, 5.0)), th, al, be, pp)
        x0, _ = cr.x0_and_f(lt, al, be, pp)
        worst_f = max(worst_f, abs(1 - lt * s * x0 ** (s - 1)))
        count += 1
    ok = all(outcomes) and worst_k <= 1e-10 and worst_f <= 1e-10
    report(5, ok, f"Boundary at every theta: (1.5,1.25) {outcomes[0]} (residual {res:.1e}), "
                  f"(1.3,1.2) {outcomes[1]}; kappa identity {worst_k:.1e}, "
                  f"f'(x0) {worst_f:.1e} over 1000 draws (<=1e-10)")


def test_criterion_6_negative_energy(constants):
    C = constants["CStar"]
    M = (1.5 * 2 / (P3.c_d * (P3.m_star - 1) * C.constant)) ** (1 / (2 - P3.m_star))
    g = RadialGrid.uniform(512, 10.0, 3)
    _, _, F1 = negative_energy_pair(M, M, C, 1.0, g, P3)
    _, _, F2 = negative_energy_pair(M, M, C, 2.0, g, P3)
    ratio = F2 / F1
    ok = F1 < 0 and F2 < 0 and abs(ratio / 2 - 1) <= 0.01
    report(6, ok, f"F0(mu=1)={F1:.4f}, F0(mu=2)={F2:.4f}, ratio {ratio:.5f} (2 within 1%)")


def test_criterion_7_verify_command():
    t = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "critmass", "verify"], capture_output=True,
                          text=True, timeout=1800)
    dt = time.perf_counter() - t
    ok = proc.returncode == 0 and dt < 900
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    report(7, ok, f"exit {proc.returncode}, {dt:.0f} s (<900 s), {tail}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
