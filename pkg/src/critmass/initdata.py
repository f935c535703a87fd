"""Initial-data families: Gaussian, uniform ball, Barenblatt profile and the
rescaled maximizer pair used to build negative-energy data."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc

from .errors import InvalidParameters, InvalidSpec, SubcriticalMasses, SupportTooLarge
from .model import Parameters
from .radial import RadialDensity, RadialGrid, free_energy, interaction_energy, lp_norm
from .variational import Kind, MaximizerResult

FAMILIES = ("Gaussian", "Ball", "Barenblatt", "RescaledMaximizer")


@dataclass(frozen=True, eq=False)
class DataSpec:
    family: str
    mass: float
    sigma: float | None = None
    R: float | None = None
    m: float | None = None
    t0: float | None = None
    mu: float | None = None
    profile: RadialDensity | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpec(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise InvalidSpec("mass must be positive")
        need = {"Gaussian": ("sigma",), "Ball": ("R",), "Barenblatt": ("m", "t0"),
                "RescaledMaximizer": ("mu",)}[self.family]
        for name in need:
            val = getattr(self, name)
            if val is None or not val > 0:
                raise InvalidSpec(f"{self.family} needs a positive {name}")
        if self.family == "Barenblatt" and not self.m > 1:
            raise InvalidSpec("Barenblatt needs m > 1")
        if self.family == "RescaledMaximizer" and self.profile is None:
            raise InvalidSpec("RescaledMaximizer needs a base profile")

    @classmethod
    def gaussian(cls, sigma, mass):
        return cls("Gaussian", mass, sigma=sigma)

    @classmethod
    def ball(cls, R, mass):
        return cls("Ball", mass, R=R)

    @classmethod
    def barenblatt(cls, m, t0, mass):
        return cls("Barenblatt", mass, m=m, t0=t0)

    @classmethod
    def rescaled_maximizer(cls, profile, mu, mass):
        return cls("RescaledMaximizer", mass, mu=mu, profile=profile)

    @classmethod
    def from_dict(cls, data: dict, profile: RadialDensity | None = None) -> "DataSpec":
        data = dict(data)
        try:
            family = data.pop("family")
            mass = float(data.pop("mass"))
        except KeyError as exc:
            raise InvalidSpec(f"data spec missing {exc.args[0]!r}") from None
        allowed = {"sigma", "R", "m", "t0", "mu"}
        extra = set(data) - allowed
        if extra:
            raise InvalidSpec(f"unknown data-spec keys {sorted(extra)}")
        return cls(family, mass, profile=profile, **{k: float(v) for k, v in data.items()})


# ---------------------------------------------------------------------------
# Barenblatt


@dataclass(frozen=True)
class Barenblatt:
    """u(r,t) = t^{-a} (C - k r^2 t^{-2b})_+^{1/(m-1)}, exact solution of u_t = Δu^m."""

    m: float
    d: int
    mass: float

    @property
    def a(self):
        return self.d / (self.d * (self.m - 1) + 2)

    @property
    def b(self):
        return self.a / self.d

    @property
    def k(self):
        return self.a * (self.m - 1) / (2 * self.m * self.d)

    @property
    def C(self):
        # M = C^{n+d/2} k^{-d/2} π^{d/2} Γ(n+1)/Γ(n+1+d/2), n = 1/(m-1)
        n, d = 1.0 / (self.m - 1), self.d
        unit = self.k ** (-d / 2) * math.pi ** (d / 2) * gamma_fn(n + 1) / gamma_fn(n + 1 + d / 2)
        return (self.mass / unit) ** (1.0 / (n + d / 2))

    def support(self, t):
        return math.sqrt(self.C / self.k) * t ** self.b

    def __call__(self, r, t):
        r = np.asarray(r, dtype=float)
        base = np.maximum(self.C - self.k * r ** 2 * t ** (-2 * self.b), 0.0)
        return t ** (-self.a) * base ** (1.0 / (self.m - 1))


def barenblatt_exact(m: float, t: float, mass: float, grid: RadialGrid) -> RadialDensity:
    """Cell averages of the Barenblatt profile of given mass at time t."""
    prof = Barenblatt(m, grid.d, mass)
    return RadialDensity(grid, _cell_average(grid, lambda r: prof(r, t)))


# ---------------------------------------------------------------------------


def _cell_average(grid: RadialGrid, func, order: int = 8) -> np.ndarray:
    x, wq = np.polynomial.legendre.leggauss(order)
    a, b, d = grid.edges[:-1], grid.edges[1:], grid.d
    r = 0.5 * (b - a)[:, None] * x[None, :] + 0.5 * (b + a)[:, None]
    wts = 0.5 * (b - a)[:, None] * wq[None, :] * r ** (d - 1)
    vals = np.maximum(func(r), 0.0)
    return grid.sigma * np.sum(vals * wts, axis=1) / grid.w


def _ball_fractions(grid: RadialGrid, R: float) -> np.ndarray:
    a, b, d = grid.edges[:-1], grid.edges[1:], grid.d
    inside = np.clip(b, None, R) ** d - np.clip(a, None, R) ** d
    return np.maximum(inside, 0.0) / (b ** d - a ** d)


def make(spec: DataSpec, grid: RadialGrid) -> RadialDensity:
    """Profile of the requested family on ``grid`` with mass exactly ``spec.mass``."""
    half, d = 0.5 * grid.r_max, grid.d
    fam = spec.family
    if fam == "Gaussian":
        s = spec.sigma
        if gammaincc(d / 2, half ** 2 / (2 * s ** 2)) >= 1e-12:
            raise SupportTooLarge(f"Gaussian sigma={s} leaves mass outside r_max/2")
        vals = _cell_average(grid, lambda r: np.exp(-0.5 * (r / s) ** 2))
    elif fam == "Ball":
        if spec.R > half:
            raise SupportTooLarge(f"ball radius {spec.R} exceeds r_max/2 = {half}")
        vals = _ball_fractions(grid, spec.R)
    elif fam == "Barenblatt":
        prof = Barenblatt(spec.m, d, spec.mass)
        if prof.support(spec.t0) > half:
            raise SupportTooLarge("Barenblatt support exceeds r_max/2")
        vals = _cell_average(grid, lambda r: prof(r, spec.t0))
    else:
        h = spec.profile
        if h.grid.d != d:
            raise InvalidParameters("profile dimension differs from grid")
        if h.support_radius() / spec.mu > half:
            raise SupportTooLarge("rescaled profile does not fit in r_max/2")
        # u(x) = λ h(μx) with λ = M μ^d / ‖h‖₁
        lam = spec.mass * spec.mu ** d / h.mass
        vals = RadialDensity(h.grid.scaled(1.0 / spec.mu), lam * h.values).remap(grid).values
    out = RadialDensity(grid, vals)
    if out.mass <= 0:
        raise SupportTooLarge("profile is not resolved by the grid")
    return out.with_mass(spec.mass)


# ---------------------------------------------------------------------------
# negative-energy data


@dataclass(frozen=True)
class NegativeEnergyData:
    u1: RadialDensity
    u2: RadialDensity
    F0: float
    F0_predicted: float
    sigma: float
    sigma_pair: float
    mu: float


def _sigma(M1, M2, value, params):
    ms = params.m_star
    return params.c_d * (ms - 1) * value * M1 * M2 / (M1 ** ms + M2 ** ms)


def negative_energy_pair(M1: float, M2: float, maximizer: MaximizerResult, mu: float,
                         grid: RadialGrid, params: Parameters | None = None,
                         detail: bool = False):
    """Data λ_i h_i(μx) with masses (M1, M2) and negative free energy.

    ``maximizer`` is a CStar or Pi result; its constant gives Σ(M), which
    must exceed one. Returns ``(u1, u2, F0)`` with F0 the free energy of the
    data on ``grid``; with ``detail=True`` a NegativeEnergyData record.
    """
    d = grid.d
    params = params or Parameters.intersection(d)
    if not params.is_intersection:
        raise InvalidParameters("negative-energy construction needs m1 = m2 = m*")
    if maximizer.kind is Kind.LAMBDA:
        raise InvalidParameters("need a CStar or Pi maximizer")
    if not (M1 > 0 and M2 > 0 and mu > 0):
        raise InvalidParameters("masses and mu must be positive")
    ms = params.m_star
    theta0 = M1 ** ms / (M1 ** ms + M2 ** ms)
    sig = _sigma(M1, M2, maximizer.constant, params)
    if sig <= 1:
        raise SubcriticalMasses(f"Sigma(M) = {sig:.6g} <= 1; construction not available")
    h1, h2 = maximizer.h1, maximizer.h2
    N1, N2 = h1.mass, h2.mass
    P1, P2 = lp_norm(h1, ms) ** ms, lp_norm(h2, ms) ** ms
    # value of the Π-quotient of this pair at the masses' θ0 (≥ η Π*)
    V = interaction_energy(h1, h2) / (N1 * N2 * (theta0 * N1 ** -ms * P1
                                                  + (1 - theta0) * N2 ** -ms * P2))
    sig_pair = _sigma(M1, M2, V, params)
    pred = (mu ** (d - 2) / (ms - 1) * (M1 ** ms * N1 ** -ms * P1 + M2 ** ms * N2 ** -ms * P2)
            * (1 - sig_pair))
    u1 = make(DataSpec.rescaled_maximizer(h1, mu, M1), grid)
    u2 = make(DataSpec.rescaled_maximizer(h2, mu, M2), grid)
    F0 = free_energy(u1, u2, params).F
    if not F0 < 0:
        raise SubcriticalMasses(
            f"discrete free energy {F0:.6g} is not negative (pair Sigma {sig_pair:.6g}); "
            "refine the grid or use a better maximizer")
    if detail:
        return NegativeEnergyData(u1, u2, F0, pred, sig, sig_pair, mu)
    return u1, u2, F0
