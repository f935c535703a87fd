"""Closed-form critical-mass constants and global-existence/blow-up verdicts.

Off the intersection point the verdict compares the weighted invariant
norm ℛ with the maximizer x0 of ``f(x) = x - Λθ x^s``. At the intersection
point m1 = m2 = 2 - 2/d it compares Σ(M) with 1. The sharp constants
(Λ*, Π*, C_*) are inputs: pass numbers, or take them from the variational
module. Since numerically estimated constants are lower bounds, Global
verdicts inherit that one-sided error.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (DegenerateExponents, IntersectionPoint, IntersectionRequired,
                     OutOfRange, RegimeMismatch)
from .model import Parameters, in_region_one_six
from .variational import alpha_interval, beta_from_alpha, check_alpha_beta

DEFAULT_THETA_SCAN = 101
BOUNDARY_TOL = 1e-6


class Outcome(str, enum.Enum):
    GLOBAL = "Global"
    BLOWUP = "BlowUp"
    BOUNDARY = "Boundary"
    INDETERMINATE = "Indeterminate"


class Theorem(str, enum.Enum):
    T12 = "T12"
    T13 = "T13"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    theorem: Theorem
    evidence: dict = field(default_factory=dict)


def young_A(theta: float, eta: float) -> float:
    """Best constant A in ``a^η b^{1-η} <= A (θ a + (1-θ) b)``."""
    if not (0 < theta < 1 and 0 < eta < 1):
        raise OutOfRange(f"theta and eta must lie in (0, 1), got {theta}, {eta}")
    return (eta / theta) ** eta * ((1 - eta) / (1 - theta)) ** (1 - eta)


def z_eta(eta: float) -> float:
    if not 0 < eta < 1:
        raise OutOfRange("eta must lie in (0, 1)")
    return eta ** eta * (1 - eta) ** (1 - eta)


def kappas(theta: float, params: Parameters) -> tuple[float, float]:
    """Amplitudes κ1, κ2 that turn F into c_d/(κ1κ2) times θ‖h1‖+(1-θ)‖h2‖-H."""
    if not 0 < theta < 1:
        raise OutOfRange("theta must lie in (0, 1)")
    m1, m2, c = params.m1, params.m2, params.c_d
    D = m1 + m2 - m1 * m2
    if abs(D) < 1e-14:
        raise DegenerateExponents("m1 + m2 = m1*m2")
    a = (m1 - 1) * theta
    b = (m2 - 1) * (1 - theta)
    k1 = c ** (m2 / D) * a ** ((m2 - 1) / D) * b ** (1 / D)
    k2 = c ** (m1 / D) * a ** (1 / D) * b ** ((m1 - 1) / D)
    return k1, k2


def exponent_sum(alpha: float, beta: float, params: Parameters) -> float:
    """s = (1-α)/m1 + (1-β)/m2."""
    return (1 - alpha) / params.m1 + (1 - beta) / params.m2


def gammas(alpha: float, beta: float, params: Parameters) -> tuple[float, float]:
    s = exponent_sum(alpha, beta, params)
    if abs(s - 1) < 1e-12:
        raise IntersectionPoint("gamma is undefined when (1-α)/m1 + (1-β)/m2 = 1")
    return alpha / (s - 1), beta / (s - 1)


def eta_of(alpha: float, beta: float, params: Parameters) -> float:
    return ((1 - alpha) / params.m1) / exponent_sum(alpha, beta, params)


def lambda_theta(lambda_star: float, theta: float, alpha: float, beta: float,
                 params: Parameters) -> float:
    """Λ*_{m1,m2,θ} = A(θ, η)^s Λ*."""
    s = exponent_sum(alpha, beta, params)
    return young_A(theta, eta_of(alpha, beta, params)) ** s * lambda_star


def x0_and_f(lam_theta: float, alpha: float, beta: float,
             params: Parameters) -> tuple[float, Callable[[float], float]]:
    """Maximizer of ``f(x) = x - Λθ x^s`` (s > 1) and ``f`` itself."""
    s = exponent_sum(alpha, beta, params)
    if abs(s - 1) < 1e-12:
        raise IntersectionPoint("x0 does not exist when the exponent sum equals 1")
    if s < 1:
        raise OutOfRange(f"exponent sum {s} < 1: f has no interior maximum")
    x0 = (1.0 / (s * lam_theta)) ** (1.0 / (s - 1))

    def f(x):
        return x - lam_theta * np.power(x, s)

    return x0, f


@dataclass(frozen=True)
class CriteriaConfig:
    params: Parameters
    alpha: float | None = None
    beta: float | None = None
    theta: float = 0.5
    M1: float | None = None
    M2: float | None = None

    def __post_init__(self):
        p = self.params
        if self.alpha is None:
            a = 0.5 * alpha_interval(p)[0]
            object.__setattr__(self, "alpha", a)
        if self.beta is None:
            object.__setattr__(self, "beta", beta_from_alpha(self.alpha, p))
        check_alpha_beta(self.alpha, self.beta, p)
        if not 0 < self.theta < 1:
            raise OutOfRange("theta must lie in (0, 1)")
        tot = self.alpha + self.beta
        if p.is_intersection:
            if abs(tot - 2.0 / p.d) > 1e-10:
                raise OutOfRange("alpha + beta must equal 2/d at the intersection point")
        elif tot > 2.0 / p.d + 1e-12:
            raise OutOfRange("alpha + beta exceeds 2/d")

    @property
    def theta0(self) -> float | None:
        if self.M1 is None or self.M2 is None:
            return None
        return theta0_of(self.M1, self.M2, self.params)

    @property
    def eta(self) -> float:
        return eta_of(self.alpha, self.beta, self.params)


def theta0_of(M1: float, M2: float, params: Parameters) -> float:
    ms = params.m_star
    return M1 ** ms / (M1 ** ms + M2 ** ms)


@dataclass(frozen=True)
class DerivedConstants:
    gamma1: float | None = None
    gamma2: float | None = None
    kappa1: float | None = None
    kappa2: float | None = None
    A: float | None = None
    lambda_star: float | None = None
    lambda_theta: float | None = None
    x0: float | None = None
    f_x0: float | None = None
    Mc: float | None = None
    z_eta: float | None = None
    sigmaM: float | None = None
    pi_star: float | None = None
    c_star: float | None = None
    R_value: float | None = None


def derived_constants(cfg: CriteriaConfig, lambda_star: float | None = None,
                      pi_star: float | None = None, c_star: float | None = None,
                      norm_m1: float | None = None,
                      norm_m2: float | None = None) -> DerivedConstants:
    """Every constant that applies to ``cfg`` given the supplied inputs."""
    p = cfg.params
    a, b, th = cfg.alpha, cfg.beta, cfg.theta
    k1, k2 = kappas(th, p)
    out = dict(kappa1=k1, kappa2=k2, lambda_star=lambda_star, pi_star=pi_star, c_star=c_star)
    if p.is_intersection:
        eta = (1 - a) / p.m_star
        out["A"] = young_A(th, eta)
        out["z_eta"] = z_eta(eta)
        if lambda_star is not None:
            out["Mc"] = mc_constant(lambda_star, a, b, p)
            out["lambda_theta"] = out["A"] * lambda_star
        if pi_star is not None and cfg.M1 is not None:
            out["sigmaM"] = sigma_of_M(cfg.M1, cfg.M2, pi_star, p)
        return DerivedConstants(**out)
    g1, g2 = gammas(a, b, p)
    eta = eta_of(a, b, p)
    out.update(gamma1=g1, gamma2=g2, A=young_A(th, eta), z_eta=z_eta(eta))
    if lambda_star is not None:
        lt = lambda_theta(lambda_star, th, a, b, p)
        x0, f = x0_and_f(lt, a, b, p)
        out.update(lambda_theta=lt, x0=x0, f_x0=float(f(x0)))
        if None not in (cfg.M1, cfg.M2, norm_m1, norm_m2):
            out["R_value"] = r_value(cfg.M1, cfg.M2, norm_m1, norm_m2, th, a, b, p)
    return DerivedConstants(**out)


# ---------------------------------------------------------------------------
# off the intersection point


def condition_17(alpha: float, beta: float, params: Parameters) -> bool:
    """Exponent restriction under which ℛ > x0 is known to give blow-up."""
    s = exponent_sum(alpha, beta, params)
    d = params.d
    bound = 2 - 2 / d - (d - 2) / d * (1 - 1 / s)
    return max(params.m1, params.m2) <= bound + 1e-12


def r_value(M1, M2, norm_m1, norm_m2, theta, alpha, beta, params) -> float:
    k1, k2 = kappas(theta, params)
    g1, g2 = gammas(alpha, beta, params)
    m1, m2 = params.m1, params.m2
    pre = k1 ** g1 * k2 ** g2 * M1 ** g1 * M2 ** g2
    return pre * (theta * k1 ** m1 * norm_m1 + (1 - theta) * k2 ** m2 * norm_m2)


def energy_bound(M1, M2, theta, alpha, beta, lambda_star, params) -> float:
    """Upper threshold c_d f(x0) / (κ1^{1+γ1} κ2^{1+γ2} M1^γ1 M2^γ2) for F[u0]."""
    k1, k2 = kappas(theta, params)
    g1, g2 = gammas(alpha, beta, params)
    lt = lambda_theta(lambda_star, theta, alpha, beta, params)
    x0, f = x0_and_f(lt, alpha, beta, params)
    den = k1 ** (1 + g1) * k2 ** (1 + g2) * M1 ** g1 * M2 ** g2
    return params.c_d * float(f(x0)) / den


def critical_identity_sides(M1, M2, norm_m1, norm_m2, params, alpha, beta,
                            lambda_star) -> tuple[float, float]:
    """Both sides of the θ-free form of ℛ = x0."""
    m1, m2, c = params.m1, params.m2, params.c_d
    a = (1 - alpha) / m1
    b = (1 - beta) / m2
    s = a + b
    e = 1.0 / (s - 1)
    g1, g2 = alpha * e, beta * e
    w1 = (m1 - 1) ** ((1 - b) * e) * (m2 - 1) ** (b * e)
    w2 = (m1 - 1) ** (a * e) * (m2 - 1) ** ((1 - a) * e)
    lhs = c ** e * M1 ** g1 * M2 ** g2 * (w1 * norm_m1 + w2 * norm_m2)
    rhs = s * (1.0 / (a ** a * b ** b * lambda_star)) ** e
    return lhs, rhs


def _require_t12(params: Parameters, check_regime: bool) -> None:
    if params.is_intersection:
        raise RegimeMismatch("the off-intersection criteria exclude m1 = m2 = 2 - 2/d")
    if check_regime and not in_region_one_six(params):
        raise RegimeMismatch(f"(m1, m2) = ({params.m1}, {params.m2}) is outside p>=1, q>=1, r>1")


def critical_identity_residual(M1, M2, norm_m1, norm_m2, params, alpha, beta,
                               lambda_star, check_regime: bool = True) -> float:
    """LHS - RHS of the θ-free critical identity (zero on the critical surface)."""
    _require_t12(params, check_regime)
    lhs, rhs = critical_identity_sides(M1, M2, norm_m1, norm_m2, params, alpha, beta,
                                       lambda_star)
    return lhs - rhs


def theta_grid(n: int = DEFAULT_THETA_SCAN) -> np.ndarray:
    if n < 1:
        raise OutOfRange("theta_scan must be positive")
    return np.linspace(0.005, 0.995, n) if n > 1 else np.array([0.5])


def theorem12_verdict(M1, M2, norm_m1, norm_m2, F0, params: Parameters, alpha=None,
                      beta=None, lambda_star: float = None, theta_scan: int = DEFAULT_THETA_SCAN,
                      tol: float = BOUNDARY_TOL, check_regime: bool = True) -> Verdict:
    """Classify data off the intersection point by scanning θ.

    Global needs the energy bound and ℛ < x0 at the same θ; BlowUp needs
    the energy bound, ℛ > x0 and the exponent restriction. ℛ/x0 does not
    depend on θ, so Boundary (|ℛ/x0 - 1| <= tol) is checked once and
    confirmed at every scanned θ.
    """
    _require_t12(params, check_regime)
    if lambda_star is None or not lambda_star > 0:
        raise OutOfRange("lambda_star must be supplied and positive")
    if alpha is None:
        alpha = 0.5 * alpha_interval(params)[0]
    if beta is None:
        beta = beta_from_alpha(alpha, params)
    check_alpha_beta(alpha, beta, params)
    s = exponent_sum(alpha, beta, params)
    if s <= 1:
        raise OutOfRange(f"(1-α)/m1 + (1-β)/m2 = {s} <= 1: no admissible x0 for this alpha")
    cond17 = condition_17(alpha, beta, params)
    lhs, rhs = critical_identity_sides(M1, M2, norm_m1, norm_m2, params, alpha, beta,
                                       lambda_star)

    rows = []
    for th in theta_grid(theta_scan):
        lt = lambda_theta(lambda_star, th, alpha, beta, params)
        x0, f = x0_and_f(lt, alpha, beta, params)
        R = r_value(M1, M2, norm_m1, norm_m2, th, alpha, beta, params)
        bound = energy_bound(M1, M2, th, alpha, beta, lambda_star, params)
        rows.append((float(th), R, x0, bound))

    ratios = np.array([R / x0 for _, R, x0, _ in rows])
    on_boundary = np.abs(ratios - 1) <= tol
    evidence = dict(F0=F0, alpha=alpha, beta=beta, s=s, condition_17=cond17,
                    identity_lhs=lhs, identity_rhs=rhs, identity_residual=lhs - rhs,
                    ratio_spread=float(ratios.max() - ratios.min()),
                    boundary_all_theta=bool(on_boundary.all()))

    def pack(th, R, x0, bound):
        return dict(evidence, theta=th, R=R, x0=x0, f_x0_bound=bound,
                    f_x0=x0 * (1 - 1 / s))

    if on_boundary.any():
        th, R, x0, bound = rows[int(np.argmin(np.abs(ratios - 1)))]
        return Verdict(Outcome.BOUNDARY, Theorem.T12, pack(th, R, x0, bound))

    glob = [r for r in rows if F0 < r[3] and r[1] < r[2]]
    blow = [r for r in rows if F0 < r[3] and r[1] > r[2]]
    if glob and blow:
        # ℛ/x0 is θ-independent, so this cannot happen for exact arithmetic
        raise AssertionError("data classified Global and BlowUp at different theta")
    if glob:
        best = max(glob, key=lambda r: r[3] - F0)
        return Verdict(Outcome.GLOBAL, Theorem.T12, pack(*best))
    if blow and cond17:
        best = max(blow, key=lambda r: r[3] - F0)
        return Verdict(Outcome.BLOWUP, Theorem.T12, pack(*best))
    th, R, x0, bound = max(rows, key=lambda r: r[3] - F0)
    ev = pack(th, R, x0, bound)
    if blow and not cond17:
        ev["reason"] = "R > x0 but the exponent restriction fails"
    else:
        ev["reason"] = "energy bound fails at every scanned theta"
    return Verdict(Outcome.INDETERMINATE, Theorem.T12, ev)


def theorem12_alpha_scan(M1, M2, norm_m1, norm_m2, F0, params: Parameters,
                         lambda_star_of_alpha: Callable[[float], float], n_alpha: int = 11,
                         **kw) -> Verdict:
    """Best verdict over ``n_alpha`` interior α values (each α is a separate criterion).

    Decisive outcomes win over Indeterminate; α values with s <= 1 are skipped.
    """
    a_max = alpha_interval(params)[0]
    verdicts = []
    for a in np.linspace(0, a_max, n_alpha + 2)[1:-1]:
        try:
            b = beta_from_alpha(a, params)
            check_alpha_beta(a, b, params)
            if exponent_sum(a, b, params) <= 1:
                continue
        except Exception:
            continue
        verdicts.append(theorem12_verdict(M1, M2, norm_m1, norm_m2, F0, params, a, b,
                                          lambda_star_of_alpha(a), **kw))
    if not verdicts:
        raise OutOfRange("no alpha in the scan gives an exponent sum above 1")
    for oc in (Outcome.BOUNDARY, Outcome.GLOBAL, Outcome.BLOWUP):
        hits = [v for v in verdicts if v.outcome is oc]
        if hits:
            return hits[0]
    return verdicts[0]


# ---------------------------------------------------------------------------
# intersection point


def _require_intersection(params: Parameters) -> None:
    if not params.is_intersection:
        raise IntersectionRequired("requires m1 = m2 = 2 - 2/d")


def mc_constant(lambda_star_mstar: float, alpha: float, beta: float,
                params: Parameters) -> float:
    """M_c = c_d Λ* (m*-1)/m* (1-α)^{(1-α)/m*} (1-β)^{(1-β)/m*}."""
    _require_intersection(params)
    ms = params.m_star
    if abs(alpha + beta - 2.0 / params.d) > 1e-10:
        raise OutOfRange("alpha + beta must equal 2/d")
    return (params.c_d * lambda_star_mstar * (ms - 1) / ms
            * (1 - alpha) ** ((1 - alpha) / ms) * (1 - beta) ** ((1 - beta) / ms))


def mc_constant_z(lambda_star_mstar: float, alpha: float, params: Parameters) -> float:
    """Second form c_d Λ* (m*-1) z((1-α)/m*)."""
    _require_intersection(params)
    ms = params.m_star
    return params.c_d * lambda_star_mstar * (ms - 1) * z_eta((1 - alpha) / ms)


def pi_upper_bound(M1: float, M2: float, lambda_star_mstar: float, alpha: float,
                   beta: float, params: Parameters) -> float:
    """Upper bound M_c (M1^{m*} + M2^{m*}) / (c_d (m*-1) M1^{1-α} M2^{1-β}) for Π*_θ0."""
    ms = params.m_star
    Mc = mc_constant(lambda_star_mstar, alpha, beta, params)
    return Mc * (M1 ** ms + M2 ** ms) / (params.c_d * (ms - 1) * M1 ** (1 - alpha)
                                         * M2 ** (1 - beta))


def sigma_of_M(M1: float, M2: float, pi_star: float, params: Parameters) -> float:
    _require_intersection(params)
    ms = params.m_star
    return params.c_d * (ms - 1) * pi_star * M1 * M2 / (M1 ** ms + M2 ** ms)


def theorem13_verdict(M1: float, M2: float, pi_star: float, params: Parameters,
                      tol: float = BOUNDARY_TOL) -> Verdict:
    """Σ(M) < 1 Global, > 1 BlowUp, within ``tol`` of 1 Boundary."""
    _require_intersection(params)
    if not pi_star > 0:
        raise OutOfRange("pi_star must be positive")
    if not (M1 > 0 and M2 > 0):
        raise OutOfRange("masses must be positive")
    sig = sigma_of_M(M1, M2, pi_star, params)
    ev = dict(sigma=sig, theta0=theta0_of(M1, M2, params), pi_star=pi_star, M1=M1, M2=M2)
    if abs(sig - 1) <= tol:
        return Verdict(Outcome.BOUNDARY, Theorem.T13, ev)
    return Verdict(Outcome.GLOBAL if sig < 1 else Outcome.BLOWUP, Theorem.T13, ev)


def critical_mass_equal(c_star: float, params: Parameters) -> float:
    """Equal-mass threshold M with c_d (m*-1) C_* M^2 / (2 M^{m*}) = 1."""
    _require_intersection(params)
    ms = params.m_star
    return (2.0 / (params.c_d * c_star * (ms - 1))) ** (1.0 / (2 - ms))
