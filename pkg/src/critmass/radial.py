"""Radial grids, piecewise-constant densities, the Newtonian potential and
the energy functionals of the two-species system.

Densities are piecewise constant on a uniform cell-centred grid in r.
Norms, masses and the interaction energy are evaluated *exactly* for that
piecewise-constant function: the potential stored per cell is the cell
average of the true Newtonian potential, so

    H[h1, h2] = sum_k h1_k * phi2_k * w_k

is the continuum double integral of the two step functions. This makes H
exactly symmetric and turns every discrete objective value into a genuine
value of the continuum functional.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, InvalidParameters
from .model import Parameters, sphere_area


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform cell-centred grid on [0, n*dr] in R^d (radial coordinate)."""

    n: int
    dr: float
    d: int = 3
    sigma: float = field(init=False)
    edges: np.ndarray = field(init=False, repr=False)
    r: np.ndarray = field(init=False, repr=False)
    w: np.ndarray = field(init=False, repr=False)
    area: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 8:
            raise InvalidParameters(f"need at least 8 cells, got {self.n}")
        if not self.dr > 0:
            raise InvalidParameters("dr must be positive")
        if self.d < 3:
            raise InvalidParameters("d must be >= 3")
        d = int(self.d)
        sig = sphere_area(d)
        edges = np.arange(self.n + 1) * self.dr
        r = (np.arange(self.n) + 0.5) * self.dr
        w = sig * (edges[1:] ** d - edges[:-1] ** d) / d
        area = sig * edges ** (d - 1)
        for name, val in (("d", d), ("sigma", sig), ("edges", edges), ("r", r),
                          ("w", w), ("area", area)):
            if isinstance(val, np.ndarray):
                val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def uniform(cls, n: int, r_max: float, d: int = 3) -> "RadialGrid":
        return cls(n, r_max / n, d)

    @property
    def r_max(self) -> float:
        return self.n * self.dr

    def scaled(self, lam: float) -> "RadialGrid":
        """Same cell count, every length multiplied by ``lam``."""
        return RadialGrid(self.n, self.dr * lam, self.d)

    def same_as(self, other: "RadialGrid") -> bool:
        return (self.n == other.n and self.d == other.d
                and abs(self.dr - other.dr) <= 1e-14 * self.dr)

    def ball_volume(self, R: float) -> float:
        return self.sigma * R ** self.d / self.d

    def __repr__(self):
        return f"RadialGrid(n={self.n}, dr={self.dr:.6g}, d={self.d})"


@dataclass(frozen=True, eq=False)
class RadialDensity:
    """Nonnegative piecewise-constant radial profile on ``grid``."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise GridMismatch(f"expected {self.grid.n} values, got shape {v.shape}")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise InvalidParameters("density values must be finite and nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "RadialDensity":
        return cls(grid, np.zeros(grid.n))

    @classmethod
    def from_function(cls, grid: RadialGrid, func, mass: float | None = None) -> "RadialDensity":
        """Sample ``func`` at cell centres; optionally rescale to ``mass``."""
        vals = np.maximum(np.asarray(func(grid.r), dtype=float), 0.0)
        h = cls(grid, vals)
        return h.with_mass(mass) if mass is not None else h

    def with_mass(self, mass: float) -> "RadialDensity":
        m = self.mass
        if m <= 0:
            raise InvalidParameters("cannot renormalize a zero profile")
        return RadialDensity(self.grid, self.values * (mass / m))

    def scaled(self, amplitude: float = 1.0, dilation: float = 1.0) -> "RadialDensity":
        """The profile ``amplitude * h(x / dilation)``, exactly, on a rescaled grid."""
        return RadialDensity(self.grid.scaled(dilation), self.values * amplitude)

    @property
    def mass(self) -> float:
        return float(np.dot(self.values, self.grid.w))

    @property
    def linf(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0

    def support_radius(self, rel: float = 0.0) -> float:
        """Outer edge of the last cell whose value exceeds ``rel * max``."""
        if self.linf == 0:
            return 0.0
        idx = np.nonzero(self.values > rel * self.linf)[0]
        return float(self.grid.edges[idx[-1] + 1])

    def enclosed_mass(self, radii) -> np.ndarray:
        """Mass inside the balls of the given radii (exact for the step profile)."""
        g = self.grid
        rr = np.clip(np.asarray(radii, dtype=float), 0.0, g.r_max)
        cum = np.concatenate(([0.0], np.cumsum(self.values * g.w)))
        k = np.clip(np.searchsorted(g.edges, rr, side="right") - 1, 0, g.n - 1)
        return cum[k] + self.values[k] * g.sigma * (rr ** g.d - g.edges[k] ** g.d) / g.d

    def remap(self, grid: RadialGrid) -> "RadialDensity":
        """Conservative cell-average transfer onto another grid.

        Mass inside every new cell is exact; mass beyond the new grid is lost.
        """
        if grid.d != self.grid.d:
            raise GridMismatch("cannot remap across dimensions")
        vals = np.diff(self.enclosed_mass(grid.edges)) / grid.w
        return RadialDensity(grid, np.maximum(vals, 0.0))

    def mass_outside(self, R: float) -> float:
        g = self.grid
        inner = np.clip(g.edges[:-1], R, None)
        outer = np.clip(g.edges[1:], R, None)
        return float(np.dot(self.values, g.sigma * (outer ** g.d - inner ** g.d) / g.d))


def check_same_grid(*profiles: RadialDensity) -> RadialGrid:
    g = profiles[0].grid
    for h in profiles[1:]:
        if not g.same_as(h.grid):
            raise GridMismatch(f"profiles live on different grids: {g} vs {h.grid}")
    return g


def lp_norm(h: RadialDensity, p: float) -> float:
    """(sum h^p w)^(1/p); exact for the piecewise-constant profile."""
    if p < 1:
        raise InvalidParameters("p must be >= 1")
    return float(np.dot(h.values ** p, h.grid.w)) ** (1.0 / p)


def power_integral(h: RadialDensity, p: float) -> float:
    """∫ h^p dx, i.e. ``lp_norm(h, p) ** p`` without the round trip."""
    return float(np.dot(h.values ** p, h.grid.w))


# ---------------------------------------------------------------------------
# Newtonian potential


@dataclass(frozen=True, eq=False)
class PotentialProfile:
    """Cell-averaged potential ``v`` and its exact derivative ``dv`` on the
    n+1 cell interfaces (``dv[0]`` is at r = 0)."""

    grid: RadialGrid
    v: np.ndarray
    dv: np.ndarray


def _kernel_weights(grid: RadialGrid):
    return _kernel_weights_cached(grid.n, grid.dr, grid.d)


@functools.lru_cache(maxsize=32)
def _kernel_weights_cached(n: int, dr: float, d: int):
    # Q_k = ∫_cell s ds ; T_k = self-interaction of one shell with itself
    grid = RadialGrid(n, dr, d)
    a, b = grid.edges[:-1], grid.edges[1:]
    Q = 0.5 * (b ** 2 - a ** 2)
    T = (2.0 / d) * ((b ** (d + 2) - a ** (d + 2)) / (d + 2) - a ** d * Q)
    Q.setflags(write=False)
    T.setflags(write=False)
    return Q, T


def kernel_potential(grid: RadialGrid, values: np.ndarray) -> np.ndarray:
    """Cell averages of ``∫ u(y) |x-y|^{2-d} dy`` for piecewise-constant ``u``.

    O(n) through cumulative sums; no c_d factor.
    """
    Q, T = _kernel_weights(grid)
    sig, w = grid.sigma, grid.w
    mass = values * w
    inner = np.concatenate(([0.0], np.cumsum(mass)[:-1]))
    outer_terms = values * Q
    outer = np.cumsum(outer_terms[::-1])[::-1] - outer_terms
    return sig * Q / w * inner + sig * outer + sig ** 2 * T / w * values


def kernel_matrix(grid: RadialGrid) -> np.ndarray:
    """Dense O(n^2) form of :func:`kernel_potential` (phi = G @ u)."""
    Q, T = _kernel_weights(grid)
    sig, w, n = grid.sigma, grid.w, grid.n
    k = np.arange(n)[:, None]
    l = np.arange(n)[None, :]
    G = np.where(l < k, sig * (Q / w)[:, None] * w[None, :], sig * Q[None, :])
    G[np.arange(n), np.arange(n)] = sig ** 2 * T / w
    return G


def newtonian_potential(u: RadialDensity, c_d: float | None = None) -> PotentialProfile:
    """Potential ``v = c_d |x|^{2-d} * u`` and its radial derivative.

    ``dv`` at an interface of radius s is ``-c_d (d-2) m(s) / s^{d-1}`` with
    m(s) the enclosed mass; for the default ``c_d`` this is
    ``-m(s) / (sigma s^{d-1})``.
    """
    g = u.grid
    if c_d is None:
        c_d = 1.0 / ((g.d - 2) * g.sigma)
    v = c_d * kernel_potential(g, u.values)
    enclosed = np.concatenate(([0.0], np.cumsum(u.values * g.w)))
    dv = np.zeros(g.n + 1)
    s = g.edges[1:]
    dv[1:] = -c_d * (g.d - 2) * enclosed[1:] / s ** (g.d - 1)
    v.setflags(write=False)
    dv.setflags(write=False)
    return PotentialProfile(g, v, dv)


def potential_at(u: RadialDensity, radii, c_d: float | None = None) -> np.ndarray:
    """Point values of the exact potential of the step profile at ``radii``."""
    g = u.grid
    d, sig = g.d, g.sigma
    if c_d is None:
        c_d = 1.0 / ((d - 2) * sig)
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    vals = u.values
    cum_mass = np.concatenate(([0.0], np.cumsum(vals * g.w)))
    Q, _ = _kernel_weights(g)
    tail = np.concatenate((np.cumsum((vals * Q)[::-1])[::-1], [0.0]))
    out = np.empty_like(radii)
    for i, r in enumerate(radii):
        j = min(int(r / g.dr), g.n)
        if j >= g.n:
            out[i] = c_d * cum_mass[-1] * r ** (2 - d)
            continue
        a, b = g.edges[j], g.edges[j + 1]
        m_in = cum_mass[j] + vals[j] * sig * (r ** d - a ** d) / d
        near = m_in * r ** (2 - d) if r > 0 else 0.0
        far = vals[j] * 0.5 * (b ** 2 - r ** 2) + tail[j + 1]
        out[i] = c_d * (near + sig * far)
    return out


def poisson_residual(u: RadialDensity, pot: PotentialProfile) -> float:
    """Scaled residual ``max_k |(r^{d-1} v')' + r^{d-1} u| w_k`` of -Δv = u.

    ``v'`` is the centred difference of the stored cell potential, so the
    check is independent of how ``pot.dv`` was produced. Normalized by the
    total mass; O(dr^2)-small for smooth ``u`` and the PDE-consistent c_d.
    """
    g = u.grid
    flux = np.zeros(g.n + 1)
    flux[1:-1] = g.area[1:-1] * np.diff(pot.v) / g.dr
    flux[-1] = g.area[-1] * pot.dv[-1]
    div = np.diff(flux)
    res = (div + u.values * g.w) / g.w
    M = max(u.mass, 1e-300)
    return float(np.max(np.abs(res) * g.w) / M) if u.mass > 0 else float(np.max(np.abs(res)))


# ---------------------------------------------------------------------------
# Functionals


def interaction_energy(h1: RadialDensity, h2: RadialDensity) -> float:
    """H[h1, h2] = ∬ h1(x) h2(y) |x-y|^{2-d} dx dy (no c_d factor)."""
    g = check_same_grid(h1, h2)
    return float(np.dot(h1.values * g.w, kernel_potential(g, h2.values)))


def interaction_energy_direct(h1: RadialDensity, h2: RadialDensity) -> float:
    """O(n^2) double sum; used to cross-check :func:`interaction_energy`."""
    g = check_same_grid(h1, h2)
    return float((h1.values * g.w) @ kernel_matrix(g) @ h2.values)


def second_moment(u1: RadialDensity, u2: RadialDensity) -> float:
    """Total second moment S = Σ_i ∫ |x|^2 u_i, exact for step profiles."""
    g = check_same_grid(u1, u2)
    return float(np.dot(_r2_weights(g), u1.values + u2.values))


def _r2_weights(g: RadialGrid) -> np.ndarray:
    a, b, d = g.edges[:-1], g.edges[1:], g.d
    return g.sigma * (b ** (d + 2) - a ** (d + 2)) / (d + 2)


@dataclass(frozen=True)
class EnergyReport:
    M1: float
    M2: float
    lm1: float
    lm2: float
    H: float
    F: float
    S: float
    I: float
    D: float | None = None
    linf1: float = 0.0
    linf2: float = 0.0


def virial_from_parts(lm1: float, lm2: float, F: float, params: Parameters) -> float:
    d = params.d
    return (2.0 * (d - 2) * F
            + 2.0 * d * ((params.m1 - 2 + 2.0 / d) / (params.m1 - 1) * lm1
                         + (params.m2 - 2 + 2.0 / d) / (params.m2 - 1) * lm2))


def free_energy(u1: RadialDensity, u2: RadialDensity, params: Parameters,
                with_dissipation: bool = False) -> EnergyReport:
    """All functionals of a species pair at one instant."""
    g = check_same_grid(u1, u2)
    if g.d != params.d:
        raise GridMismatch("grid dimension differs from params.d")
    lm1 = power_integral(u1, params.m1)
    lm2 = power_integral(u2, params.m2)
    H = interaction_energy(u1, u2)
    F = lm1 / (params.m1 - 1) + lm2 / (params.m2 - 1) - params.c_d * H
    I = virial_from_parts(lm1, lm2, F, params)
    D = dissipation(u1, u2, params) if with_dissipation else None
    return EnergyReport(M1=u1.mass, M2=u2.mass, lm1=lm1, lm2=lm2, H=H, F=F,
                        S=second_moment(u1, u2), I=I, D=D,
                        linf1=u1.linf, linf2=u2.linf)


def virial_rate(u1: RadialDensity, u2: RadialDensity, params: Parameters) -> float:
    """Rate I of the second moment, I = 2(d-2)F + 2d Σ (m_i-2+2/d)/(m_i-1) ||u_i||^{m_i}."""
    return free_energy(u1, u2, params).I


def _species_dissipation(u: np.ndarray, m: float, v_other: np.ndarray,
                         g: RadialGrid) -> float:
    if u.max() <= 0:
        return 0.0
    active = u >= 1e-14 * u.max()
    xi = m / (m - 1) * u ** (m - 1) - v_other
    both = active[1:] & active[:-1]
    grad = np.diff(xi) / g.dr
    weight = 0.5 * (u[1:] + u[:-1])
    # interface control volume: area * dr
    return float(np.sum(np.where(both, weight * grad ** 2 * g.area[1:-1] * g.dr, 0.0)))


def dissipation(u1: RadialDensity, u2: RadialDensity, params: Parameters) -> float:
    """Discrete D = Σ_i ∫ u_i |m_i/(m_i-1) ∇u_i^{m_i-1} - ∇v_j|^2.

    Interface-centred differences; interfaces touching a cell below
    1e-14 * max(u) are dropped, so the support edge is only differenced
    from inside.
    """
    g = check_same_grid(u1, u2)
    v1 = params.c_d * kernel_potential(g, u1.values)
    v2 = params.c_d * kernel_potential(g, u2.values)
    return (_species_dissipation(u1.values, params.m1, v2, g)
            + _species_dissipation(u2.values, params.m2, v1, g))
