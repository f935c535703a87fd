"""Parameter records, scaling exponents and exponent-regime classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import DegenerateExponents, InvalidParameters


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass(frozen=True)
class Parameters:
    """Dimension, diffusion exponents and the derived dimensional constants.

    ``c_d`` defaults to ``1/((d-2)*sigma)`` so that ``v = c_d |x|^{2-d} * u``
    solves ``-Δv = u``. Pass ``c_d`` explicitly to override the convention.
    """

    d: int
    m1: float
    m2: float
    c_d: float | None = None
    m_star: float = field(init=False)
    m_lower: float = field(init=False)
    sigma: float = field(init=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise InvalidParameters(f"dimension must be an integer >= 3, got {self.d}")
        if not (self.m1 > 1 and self.m2 > 1):
            raise InvalidParameters(f"need m1, m2 > 1, got ({self.m1}, {self.m2})")
        d = int(self.d)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "m_star", 2.0 - 2.0 / d)
        object.__setattr__(self, "m_lower", 2.0 * d / (d + 2.0))
        object.__setattr__(self, "sigma", sphere_area(d))
        if self.c_d is None:
            object.__setattr__(self, "c_d", 1.0 / ((d - 2) * self.sigma))

    @classmethod
    def intersection(cls, d: int = 3, c_d: float | None = None) -> "Parameters":
        """Parameters at the intersection point m1 = m2 = 2 - 2/d."""
        m = 2.0 - 2.0 / d
        return cls(d, m, m, c_d)

    @property
    def newtonian_c_d(self) -> float:
        """The PDE-consistent normalization, regardless of any override."""
        return 1.0 / ((self.d - 2) * self.sigma)

    @property
    def is_intersection(self) -> bool:
        return is_close(self.m1, self.m_star) and is_close(self.m2, self.m_star)

    def swapped(self) -> "Parameters":
        return Parameters(self.d, self.m2, self.m1, self.c_d)


def is_close(a: float, b: float, tol: float = 1e-10) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(b))


@dataclass(frozen=True)
class ScalingExponents:
    p: float
    q: float
    r: float


def scaling_exponents(params: Parameters) -> ScalingExponents:
    """Scaling exponents p, q of the mass-invariant rescaling, and r."""
    m1, m2, d = params.m1, params.m2, params.d
    D = m1 + m2 - m1 * m2
    if abs(D) < 1e-14:
        raise DegenerateExponents("m1 + m2 = m1*m2: p and q are undefined")
    p = d * D / (2.0 * m2)
    q = d * D / (2.0 * m1)
    r = (1.0 + 2.0 / d) * m1 * m2 / (m1 + m2)
    return ScalingExponents(p, q, r)


class Regime(str, enum.Enum):
    SUBCRITICAL = "Subcritical"
    CRITICAL_L1 = "CriticalL1"
    CRITICAL_L2 = "CriticalL2"
    INTERSECTION = "Intersection"
    REGION_ONE_SIX = "RegionOneSix"
    SUPERCRITICAL = "Supercritical"


@dataclass(frozen=True)
class RegimeLabel:
    label: Regime
    p: float
    q: float
    r: float


def classify_regime(params: Parameters, tol: float = 1e-10) -> RegimeLabel:
    """Place (m1, m2) relative to the critical lines L1, L2, L3.

    ``q = 1`` is the line L1 and ``p = 1`` is L2; a point on a line
    equation but outside its segment range is not labelled critical.
    """
    ex = scaling_exponents(params)
    p, q, r = ex.p, ex.q, ex.r
    m1, m2, ms, d = params.m1, params.m2, params.m_star, params.d

    def near(a, b):
        return abs(a - b) <= tol * max(1.0, abs(b))

    def le(a, b):
        return a <= b or near(a, b)

    if near(m1, ms) and near(m2, ms):
        return RegimeLabel(Regime.INTERSECTION, p, q, r)

    on_l1 = near(q, 1.0) and le(ms, m1) and m1 < d / 2 and 1 < m2 and le(m2, ms)
    on_l2 = near(p, 1.0) and le(ms, m2) and m2 < d / 2 and 1 < m1 and le(m1, ms)
    if on_l1:
        return RegimeLabel(Regime.CRITICAL_L1, p, q, r)
    if on_l2:
        return RegimeLabel(Regime.CRITICAL_L2, p, q, r)
    if (p < 1 and not near(p, 1.0)) or (q < 1 and not near(q, 1.0)):
        return RegimeLabel(Regime.SUBCRITICAL, p, q, r)
    if r > 1 and not near(r, 1.0):
        return RegimeLabel(Regime.REGION_ONE_SIX, p, q, r)
    return RegimeLabel(Regime.SUPERCRITICAL, p, q, r)


def in_region_one_six(params: Parameters, tol: float = 1e-10) -> bool:
    """p >= 1, q >= 1, r > 1 (boundaries L1/L2 included, L3 excluded)."""
    ex = scaling_exponents(params)
    return ex.p >= 1 - tol and ex.q >= 1 - tol and ex.r > 1 + tol
