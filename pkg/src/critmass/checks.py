"""Property battery run by ``critmass verify``.

Each check returns a ``Check`` with a pass flag and the measured numbers.
Checks share a ``BatteryContext`` so expensive constants are computed once.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import criteria as cr
from .errors import CritmassError
from .initdata import DataSpec, barenblatt_exact, make, negative_energy_pair
from .model import Parameters
from .radial import (RadialDensity, RadialGrid, interaction_energy,
                     newtonian_potential, poisson_residual, second_moment)
from .solver import SolverConfig, run
from .variational import ObjectiveSpec, alpha_interval, beta_from_alpha, estimate_constant

log = logging.getLogger(__name__)


@dataclass
class Check:
    name: str
    ok: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0


@dataclass
class BatteryContext:
    d: int = 3
    c_d: float | None = None
    n: int = 512
    seed: int = 0
    constants: dict = field(default_factory=dict)

    @property
    def params(self) -> Parameters:
        return Parameters.intersection(self.d, self.c_d)

    def constant(self, key: str):
        if key not in self.constants:
            spec = {"CStar": ObjectiveSpec.cstar(self.d),
                    "Lambda": ObjectiveSpec.lam(Parameters.intersection(self.d))}
            if key.startswith("Pi"):
                spec = ObjectiveSpec.pi(float(key[2:]), self.d)
            else:
                spec = spec[key]
            self.constants[key] = estimate_constant(spec, n=self.n)
        return self.constants[key]


def _le(a, ea, b, eb):
    """a <= b unless the error bars rule it out."""
    return bool(a <= b + ea + eb)


# ---------------------------------------------------------------------------
# conservation, energy decay, virial consistency


def check_conservation(ctx: BatteryContext) -> list[Check]:
    p = ctx.params
    mc = cr.critical_mass_equal(ctx.constant("CStar").constant, Parameters.intersection(ctx.d))
    out = []
    residuals = []
    for n in (128, 256, 512):
        g = RadialGrid.uniform(n, 10.0, ctx.d)
        u = make(DataSpec.gaussian(0.5, 0.5 * mc), g)
        cfg = SolverConfig(p, g, t_end=0.05, dt_init=1e-3, diag_every=10)
        tr = run(u, u, cfg)
        residuals.append(tr.virial_residual())
        if n == 512:
            out.append(Check("mass_conservation", tr.mass_drift <= 1e-10,
                             dict(mass_drift=tr.mass_drift, clipped=list(tr.clipped_mass))))
            out.append(Check("energy_decay", tr.energy_violations == 0,
                             dict(violations=tr.energy_violations,
                                  max_increase=tr.max_energy_increase)))
    out.append(Check("virial_refinement", residuals[-1] <= 0.01,
                     dict(residuals=residuals, n=[128, 256, 512])))
    return out


# ---------------------------------------------------------------------------
# closed-form oracles


def check_oracles(ctx: BatteryContext) -> list[Check]:
    p = ctx.params
    g = RadialGrid.uniform(ctx.n, 4.0, ctx.d)
    M, R = 1.0, 1.0
    ball = make(DataSpec.ball(R, M), g)
    pot = newtonian_potential(ball, p.c_d)
    v0 = float(pot.v[0])
    zero = RadialDensity.zeros(g)
    H = interaction_energy(ball, ball)
    S = second_moment(ball, zero)
    rel = lambda a, b: abs(a - b) / abs(b)
    checks = [
        Check("ball_potential", rel(v0, 3 * M / (8 * math.pi * R)) <= 2e-3, dict(v0=v0)),
        Check("ball_self_energy", rel(H, 6 / 5 * M ** 2 / R) <= 2e-3, dict(H=H)),
        Check("ball_second_moment", rel(S, 3 / 5 * M * R ** 2) <= 2e-3, dict(S=S)),
    ]
    gg = RadialGrid.uniform(ctx.n, 10.0, ctx.d)
    smooth = make(DataSpec.gaussian(0.6, 1.0), gg)
    res = poisson_residual(smooth, newtonian_potential(smooth, p.c_d))
    checks.append(Check("poisson_residual", res <= 2e-5, dict(residual=res, c_d=p.c_d)))
    # Barenblatt over one doubling time
    m, t0 = 2.0, 0.1
    gb = RadialGrid.uniform(256, 4.0, ctx.d)
    u0 = make(DataSpec.barenblatt(m, t0, 1.0), gb)
    cfg = SolverConfig(Parameters(ctx.d, m, m), gb, t_end=t0, dt_init=1e-3, diag_every=100)
    tr = run(u0, RadialDensity.zeros(gb), cfg)
    exact = barenblatt_exact(m, 2 * t0, 1.0, gb)
    err = float(np.dot(np.abs(tr.final.u1.values - exact.values), gb.w))
    checks.append(Check("barenblatt_l1", err <= 0.01, dict(l1_error=err)))
    return checks


# ---------------------------------------------------------------------------
# constant orderings


def check_constants(ctx: BatteryContext) -> list[Check]:
    params = Parameters.intersection(ctx.d)
    C = ctx.constant("CStar")
    lam = ctx.constant("Lambda")
    val = lambda r: (r.constant, r.error_bar or 0.0)
    c, ec = val(C)
    lv, el = val(lam)
    checks = []
    for t0 in (0.3, 0.5, 0.7):
        pi = ctx.constant(f"Pi{t0}")
        pv, ep = val(pi)
        checks.append(Check(f"cstar_le_pi_{t0}", _le(c, ec, pv, ep), dict(c_star=c, pi=pv)))
        # (M1, M2) realizing this θ0, then the bound built from Λ* and M_c
        M1 = (t0 / (1 - t0)) ** (1 / params.m_star)
        a = b = 1.0 / ctx.d
        ub = cr.pi_upper_bound(M1, 1.0, lv, a, b, params)
        checks.append(Check(f"pi_le_upper_{t0}", _le(pv, ep, ub, el), dict(pi=pv, bound=ub)))
    pi5 = ctx.constant("Pi0.5").constant
    checks.append(Check("pi_half_eq_cstar", abs(pi5 - c) <= 0.01 * c, dict(pi=pi5, c_star=c)))
    checks.append(Check("cstar_le_lambda", _le(c, ec, lv, el), dict(c_star=c, lambda_star=lv)))
    return checks


# ---------------------------------------------------------------------------
# off-intersection bookkeeping: critical surface, κ identities, x0


def boundary_norm_m1(M1, M2, norm_m2, params, alpha, beta, lambda_star=1.0):
    """‖u1‖^{m1}_{m1} putting the data on the critical surface (LHS is linear in it)."""
    l0, rhs = cr.critical_identity_sides(M1, M2, 0.0, norm_m2, params, alpha, beta, lambda_star)
    l1, _ = cr.critical_identity_sides(M1, M2, 1.0, norm_m2, params, alpha, beta, lambda_star)
    return (rhs - l0) / (l1 - l0)


def random_admissible(rng, d=3):
    """(params, alpha, beta, theta) inside the p >= 1, q >= 1, r > 1 region with s > 1."""
    while True:
        m1, m2 = rng.uniform(1.05, 2.0 - 2.0 / d, size=2)
        p = Parameters(d, float(m1), float(m2))
        if p.is_intersection or not cr.in_region_one_six(p):
            continue
        amax, _ = alpha_interval(p)
        a = float(rng.uniform(0.02, 0.98) * amax)
        try:
            b = beta_from_alpha(a, p)
            cr.check_alpha_beta(a, b, p)
        except CritmassError:
            continue
        if cr.exponent_sum(a, b, p) <= 1 + 1e-6:
            continue
        return p, a, b, float(rng.uniform(0.01, 0.99))


def check_theorem12(ctx: BatteryContext) -> list[Check]:
    p = Parameters(ctx.d, 1.5, 1.25)
    a = 0.55
    b = beta_from_alpha(a, p)
    M1, M2, n2 = 2.0, 3.0, 1.7
    n1 = boundary_norm_m1(M1, M2, n2, p, a, b)
    resid = cr.critical_identity_residual(M1, M2, n1, n2, p, a, b, 1.0, check_regime=False)
    v = cr.theorem12_verdict(M1, M2, n1, n2, -1.0, p, a, b, lambda_star=1.0,
                             check_regime=False)
    ok_b = (v.outcome is cr.Outcome.BOUNDARY and v.evidence["boundary_all_theta"])
    # same check inside the region proper
    q = Parameters(ctx.d, 1.3, 1.2)
    aq = 0.5 * alpha_interval(q)[0]
    bq = beta_from_alpha(aq, q)
    n1q = boundary_norm_m1(M1, M2, n2, q, aq, bq)
    vq = cr.theorem12_verdict(M1, M2, n1q, n2, -1.0, q, aq, bq, lambda_star=1.0)
    ok_q = vq.outcome is cr.Outcome.BOUNDARY and vq.evidence["boundary_all_theta"]

    rng = np.random.default_rng(ctx.seed)
    worst_k, worst_f = 0.0, 0.0
    for _ in range(1000):
        pp, al, be, th = random_admissible(rng, ctx.d)
        k1, k2 = cr.kappas(th, pp)
        prod = k1 * k2
        r1 = abs(prod - pp.c_d * (pp.m1 - 1) * th * k1 ** pp.m1) / prod
        r2 = abs(prod - pp.c_d * (pp.m2 - 1) * (1 - th) * k2 ** pp.m2) / prod
        worst_k = max(worst_k, r1, r2)
        lt = cr.lambda_theta(float(rng.uniform(0.2, 5.0)), th, al, be, pp)
        x0, _ = cr.x0_and_f(lt, al, be, pp)
        s = cr.exponent_sum(al, be, pp)
        fprime = 1 - lt * s * x0 ** (s - 1)
        worst_f = max(worst_f, abs(fprime))
    return [
        Check("t12_boundary_all_theta", bool(ok_b and ok_q),
              dict(residual=resid, outcome=v.outcome.value, region_point_outcome=vq.outcome.value)),
        Check("kappa_identities", worst_k <= 1e-10, dict(max_rel_residual=worst_k)),
        Check("x0_first_order", worst_f <= 1e-10, dict(max_abs_fprime=worst_f)),
    ]


# ---------------------------------------------------------------------------
# negative-energy construction


def check_negative_energy(ctx: BatteryContext) -> list[Check]:
    params = Parameters.intersection(ctx.d, ctx.c_d)
    C = ctx.constant("CStar")
    ms = params.m_star
    # equal masses with Σ = 1.5
    M = (1.5 * 2.0 / (params.c_d * (ms - 1) * C.constant)) ** (1.0 / (2 - ms))
    g = RadialGrid.uniform(ctx.n, 10.0, ctx.d)
    try:
        _, _, F1 = negative_energy_pair(M, M, C, 1.0, g, params)
        _, _, F2 = negative_energy_pair(M, M, C, 2.0, g, params)
    except CritmassError as exc:
        return [Check("negative_energy", False, dict(error=str(exc)))]
    ratio = F2 / F1
    return [Check("negative_energy_sign", F1 < 0 and F2 < 0, dict(F0_mu1=F1, F0_mu2=F2)),
            Check("negative_energy_scaling", abs(ratio / 2 ** (ctx.d - 2) - 1) <= 0.01,
                  dict(ratio=ratio))]


BATTERY = (("conservation", check_conservation), ("oracles", check_oracles),
           ("constants", check_constants), ("theorem12", check_theorem12),
           ("negative_energy", check_negative_energy))


def run_battery(ctx: BatteryContext | None = None, only=None) -> list[Check]:
    ctx = ctx or BatteryContext()
    results = []
    for name, fn in BATTERY:
        if only and name not in only:
            continue
        t = time.perf_counter()
        try:
            checks = fn(ctx)
        except CritmassError as exc:
            checks = [Check(name, False, dict(error=f"{type(exc).__name__}: {exc}"))]
        dt = time.perf_counter() - t
        for c in checks:
            c.seconds = dt / len(checks)
        results.extend(checks)
        log.info("%s done in %.1fs", name, dt)
    return results
