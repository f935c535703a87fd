"""Numerical estimates of the sharp constants Λ*, Π*_θ0 and C_*.

All three are suprema of scale-invariant ratios ``H[h1,h2] / denominator``
over nonnegative radial profiles. The search is a block-coordinate ascent:
with the partner profile fixed, the optimal profile among those with given
L^1 and L^m norms is the Euler-Lagrange "bathtub" shape

    h = ((φ - μ)_+ / ν)^{1/(m-1)},     φ = |x|^{2-d} * partner,

so each block step maximizes the objective along the one-parameter family
indexed by the multiplier μ (ν only fixes the amplitude, to which every
objective is invariant). For the one-species problem C_* the same step is a
conditional-gradient step on the convex functional H[h,h]. Either way the
objective never decreases, and every value reported is the exact objective
of a piecewise-constant trial pair, hence a lower bound of the supremum.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidSpec, NoConvergence, ZeroProfile
from .model import Parameters
from .radial import RadialDensity, RadialGrid, check_same_grid, kernel_potential

log = logging.getLogger(__name__)


class Kind(str, enum.Enum):
    LAMBDA = "Lambda"
    PI = "Pi"
    CSTAR = "CStar"


def alpha_interval(params: Parameters) -> tuple[float, float]:
    """Open upper limits of the admissible (alpha, beta) intervals."""
    m1, m2, d = params.m1, params.m2, params.d
    c = 1.0 + 2.0 / d - 1.0 / m1 - 1.0 / m2
    return m1 / (m1 - 1) * c, m2 / (m2 - 1) * c


def beta_from_alpha(alpha: float, params: Parameters) -> float:
    m1, m2, d = params.m1, params.m2, params.d
    c = 1.0 + 2.0 / d - 1.0 / m1 - 1.0 / m2
    return (c - (m1 - 1) / m1 * alpha) * m2 / (m2 - 1)


def default_alpha_beta(params: Parameters) -> tuple[float, float]:
    """Midpoint alpha of its admissible interval, beta from the linear constraint."""
    a_max, _ = alpha_interval(params)
    alpha = 0.5 * a_max
    return alpha, beta_from_alpha(alpha, params)


def check_alpha_beta(alpha: float, beta: float, params: Parameters, tol: float = 1e-12) -> None:
    m1, m2, d = params.m1, params.m2, params.d
    a_max, b_max = alpha_interval(params)
    if a_max <= 0:
        raise InvalidSpec("no admissible alpha: 1 + 2/d <= 1/m1 + 1/m2")
    if not (0 < alpha < a_max and 0 < beta < b_max):
        raise InvalidSpec(f"alpha={alpha}, beta={beta} outside (0,{a_max}) x (0,{b_max})")
    lhs = (m1 - 1) / m1 * alpha + (m2 - 1) / m2 * beta
    rhs = 1.0 + 2.0 / d - 1.0 / m1 - 1.0 / m2
    if abs(lhs - rhs) > tol * max(1.0, abs(rhs)):
        raise InvalidSpec(f"alpha/beta violate the linear constraint: {lhs} != {rhs}")


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: Kind
    params: Parameters
    alpha: float | None = None
    beta: float | None = None
    theta0: float | None = None

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        p = self.params
        if kind is Kind.LAMBDA:
            if self.alpha is None:
                a, b = default_alpha_beta(p)
                object.__setattr__(self, "alpha", a)
                object.__setattr__(self, "beta", b)
            elif self.beta is None:
                object.__setattr__(self, "beta", beta_from_alpha(self.alpha, p))
            check_alpha_beta(self.alpha, self.beta, p)
        elif kind is Kind.PI:
            if not p.is_intersection:
                raise InvalidSpec("Pi requires m1 = m2 = 2 - 2/d")
            if self.theta0 is None or not 0 < self.theta0 < 1:
                raise InvalidSpec("Pi requires theta0 in (0, 1)")
        elif not p.is_intersection:
            raise InvalidSpec("CStar requires m1 = m2 = 2 - 2/d")

    @classmethod
    def cstar(cls, d: int = 3) -> "ObjectiveSpec":
        return cls(Kind.CSTAR, Parameters.intersection(d))

    @classmethod
    def pi(cls, theta0: float, d: int = 3) -> "ObjectiveSpec":
        return cls(Kind.PI, Parameters.intersection(d), theta0=theta0)

    @classmethod
    def lam(cls, params: Parameters, alpha: float | None = None,
            beta: float | None = None) -> "ObjectiveSpec":
        return cls(Kind.LAMBDA, params, alpha=alpha, beta=beta)

    @property
    def exponents(self) -> tuple[float, float]:
        return self.params.m1, self.params.m2


# ---------------------------------------------------------------------------
# objective evaluation


def _norms(values: np.ndarray, w: np.ndarray, m: float) -> tuple[float, float]:
    return float(np.dot(values, w)), float(np.dot(values ** m, w))


def _ratio(spec: ObjectiveSpec, H: float, N1: float, P1: float, N2: float, P2: float) -> float:
    m1, m2 = spec.exponents
    if spec.kind is Kind.LAMBDA:
        den = (N1 ** spec.alpha * N2 ** spec.beta
               * P1 ** ((1 - spec.alpha) / m1) * P2 ** ((1 - spec.beta) / m2))
    elif spec.kind is Kind.PI:
        t = spec.theta0
        den = N1 * N2 * (t * N1 ** (-m1) * P1 + (1 - t) * N2 ** (-m2) * P2)
    else:
        den = N1 ** (2.0 / spec.params.d) * P1
    return H / den


def objective(h1: RadialDensity, h2: RadialDensity | None, spec: ObjectiveSpec) -> float:
    """Value of the ratio functional (𝓦, 𝓥 or the C_* quotient) at a trial pair.

    For ``CStar`` only ``h1`` is used.
    """
    if spec.kind is Kind.CSTAR or h2 is None:
        h2 = h1
    g = check_same_grid(h1, h2)
    m1, m2 = spec.exponents
    N1, P1 = _norms(h1.values, g.w, m1)
    N2, P2 = _norms(h2.values, g.w, m2)
    if N1 <= 0 or N2 <= 0:
        raise ZeroProfile("objective undefined for a zero profile")
    H = float(np.dot(h1.values * g.w, kernel_potential(g, h2.values)))
    return _ratio(spec, H, N1, P1, N2, P2)


# ---------------------------------------------------------------------------
# rearrangement and normalization


def rearrange_decreasing(h: RadialDensity) -> RadialDensity:
    """Discrete symmetric decreasing rearrangement (layer-cake reconstruction).

    The distribution function of the step profile, i.e. the volume carried
    by each value, is preserved: the values are sorted in decreasing order
    and laid out from the origin, and the resulting piecewise-constant
    function of the enclosed *volume* is averaged back onto the cells. Mass
    is preserved exactly; other L^p norms are preserved exactly when the
    volumes line up with cell boundaries (in particular for already
    non-increasing profiles, which are returned unchanged) and otherwise to
    within one partial cell per value level.
    """
    g = h.grid
    vals = h.values
    if np.all(np.diff(vals) <= 0):
        return h
    order = np.argsort(-vals, kind="stable")
    sv = vals[order]
    vol_edges = np.concatenate(([0.0], np.cumsum(g.w[order])))
    cell_vol_edges = np.concatenate(([0.0], np.cumsum(g.w)))
    # integrate the step function (of enclosed volume) over each target cell
    cum_mass = np.concatenate(([0.0], np.cumsum(sv * g.w[order])))

    def mass_below(V):
        j = np.clip(np.searchsorted(vol_edges, V, side="right") - 1, 0, len(sv) - 1)
        return cum_mass[j] + sv[j] * (V - vol_edges[j])

    mb = mass_below(np.minimum(cell_vol_edges, vol_edges[-1]))
    out = np.maximum(np.diff(mb) / g.w, 0.0)
    return RadialDensity(g, out)


@dataclass(frozen=True)
class MaximizerState:
    h1: RadialDensity
    h2: RadialDensity
    lam1: float = 1.0
    lam2: float = 1.0
    mu: float = 1.0
    objective: float = float("nan")


def normalize_pair(state: MaximizerState, spec: ObjectiveSpec) -> MaximizerState:
    """Amplitude/dilation rescaling that puts the pair in its canonical gauge.

    ``h_i -> lam_i h_i(mu x)``, realized exactly by rescaling the grid by
    ``1/mu``. Lambda: ``||h1||_{m1} = ||h2||_{m2} = 1`` and
    ``||h1||_1^α ||h2||_1^β = 1``. Pi: ``||h_i||_1 = 1`` and
    ``θ0 ||h1||^{m*}_{m*} + (1-θ0) ||h2||^{m*}_{m*} = 1``. CStar:
    ``||h||_1 = ||h||_{m*} = 1``. The objective value is unchanged.
    """
    h1, h2 = state.h1, state.h2
    g = check_same_grid(h1, h2)
    d = g.d
    m1, m2 = spec.exponents
    N1, P1 = _norms(h1.values, g.w, m1)
    N2, P2 = _norms(h2.values, g.w, m2)
    if min(N1, N2) <= 0:
        raise ZeroProfile("cannot normalize a zero profile")
    if spec.kind is Kind.LAMBDA:
        a, b = spec.alpha, spec.beta
        L1, L2 = P1 ** (1 / m1), P2 ** (1 / m2)
        K = (m1 - 1) / m1 * a + (m2 - 1) / m2 * b
        mu = (N1 ** a * N2 ** b * L1 ** (-a) * L2 ** (-b)) ** (1.0 / (d * K))
        lam1 = mu ** (d / m1) / L1
        lam2 = mu ** (d / m2) / L2
    elif spec.kind is Kind.PI:
        t = spec.theta0
        B = t * N1 ** (-m1) * P1 + (1 - t) * N2 ** (-m2) * P2
        mu = B ** (-1.0 / (d - 2))
        lam1 = mu ** d / N1
        lam2 = mu ** d / N2
    else:
        mu = (N1 ** m1 / P1) ** (1.0 / (d - 2))
        lam1 = lam2 = mu ** d / N1
    new_grid = g.scaled(1.0 / mu)
    n1 = RadialDensity(new_grid, h1.values * lam1)
    n2 = n1 if spec.kind is Kind.CSTAR else RadialDensity(new_grid, h2.values * lam2)
    return MaximizerState(n1, n2, lam1, lam2, mu, objective(n1, n2, spec))


# ---------------------------------------------------------------------------
# maximization


@dataclass
class MaximizerResult:
    constant: float
    h1: RadialDensity
    h2: RadialDensity
    iterations: int
    residual: float
    grid: RadialGrid
    converged: bool
    kind: Kind
    history: list = field(default_factory=list, repr=False)
    # indices into ``history`` where the grid changed; the value is monotone
    # between consecutive breaks
    grid_changes: list = field(default_factory=list, repr=False)
    error_bar: float | None = None
    seed: str = ""
    baseline: float = float("nan")
    regrids: int = 0
    seed_values: dict = field(default_factory=dict, repr=False)
    coarse_constant: float | None = None


def _bathtub(phi: np.ndarray, mu: float, n_exp: float) -> np.ndarray:
    return np.maximum(phi - mu, 0.0) ** n_exp


class _Evaluator:
    """Objective along the bathtub family for one block update."""

    def __init__(self, spec: ObjectiveSpec, grid: RadialGrid):
        self.spec = spec
        self.g = grid

    def pair_value(self, v1: np.ndarray, v2: np.ndarray) -> float:
        g, spec = self.g, self.spec
        m1, m2 = spec.exponents
        N1, P1 = _norms(v1, g.w, m1)
        N2, P2 = _norms(v2, g.w, m2)
        if N1 <= 0 or N2 <= 0:
            return -np.inf
        # scale out amplitudes to keep powers well conditioned
        s1, s2 = 1.0 / N1, 1.0 / N2
        H = float(np.dot(v1 * s1 * g.w, kernel_potential(g, v2 * s2)))
        return _ratio(spec, H, 1.0, P1 * s1 ** m1, 1.0, P2 * s2 ** m2)


def _best_mu(value_of_mu, mu_lo: float, mu_hi: float, n_scan: int = 24):
    """Global-ish maximization over μ: log-spaced scan plus bounded Brent."""
    ts = np.linspace(0.0, 1.0, n_scan + 2)[1:-1]
    mus = mu_lo + (mu_hi - mu_lo) * ts ** 2
    vals = np.array([value_of_mu(m) for m in mus])
    j = int(np.argmax(vals))
    lo = mus[j - 1] if j > 0 else mu_lo
    hi = mus[j + 1] if j < len(mus) - 1 else mu_hi
    res = minimize_scalar(lambda m: -value_of_mu(m), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13 * max(1.0, abs(hi))})
    if -res.fun >= vals[j]:
        return float(res.x), float(-res.fun)
    return float(mus[j]), float(vals[j])


def _gaussian_seed(grid: RadialGrid, width: float) -> RadialDensity:
    return RadialDensity.from_function(grid, lambda r: np.exp(-0.5 * (r / width) ** 2))


def default_grid(n: int = 512, r_max: float = 10.0, d: int = 3) -> RadialGrid:
    return RadialGrid.uniform(n, r_max, d)


def _support(v: np.ndarray, grid: RadialGrid) -> float:
    idx = np.nonzero(v > 0)[0]
    return float(grid.edges[idx[-1] + 1]) if idx.size else 0.0


def _dilation_move(ev, grid, v1, v2, current, span: float = 1.5):
    """Best relative dilation ``h2(x) -> h2(x/λ)`` for λ in [1/span, span]."""

    def dilate(lam):
        return RadialDensity(grid.scaled(lam), v2).remap(grid).values

    def value(t):
        cand = dilate(math.exp(t))
        return ev.pair_value(v1, cand) if cand.any() else -np.inf

    L = math.log(span)
    res = minimize_scalar(lambda t: -value(t), bounds=(-L, L), method="bounded",
                          options={"xatol": 1e-10})
    val = -res.fun
    if val > current * (1 + 1e-15):
        cand = dilate(math.exp(res.x))
        return cand / cand.dot(grid.w), val
    return None, current


@dataclass
class _Ascent:
    value: float
    grid: RadialGrid
    v1: np.ndarray
    v2: np.ndarray
    iterations: int = 0
    residual: float = np.inf
    converged: bool = False
    clamped: bool = False
    regrids: int = 0


class _Ascender:
    """Block-coordinate ascent on one fixed cell count."""

    def __init__(self, spec: ObjectiveSpec, tol: float, support_fraction: float):
        self.spec = spec
        self.tol = tol
        self.sf = support_fraction
        self.single = spec.kind is Kind.CSTAR
        m1, m2 = spec.exponents
        self.n_exp = (1.0 / (m1 - 1), 1.0 / (m2 - 1))
        self.history: list[float] = []
        self.breaks: list[int] = []

    def _block(self, ev, g, partner, n_exp, other, first):
        phi = kernel_potential(g, partner)
        edge_idx = max(1, int(self.sf * g.n)) - 1
        mu_lo, mu_hi = phi[edge_idx], phi[0]
        if not mu_hi > mu_lo:
            return None, -np.inf, False

        def value(mu):
            cand = _bathtub(phi, mu, n_exp)
            if not cand.any():
                return -np.inf
            if self.single:
                return ev.pair_value(cand, cand)
            return ev.pair_value(cand, other) if first else ev.pair_value(other, cand)

        mu, val = _best_mu(value, mu_lo, mu_hi)
        cand = _bathtub(phi, mu, n_exp)
        clamped = mu <= mu_lo + 1e-6 * (mu_hi - mu_lo)
        return cand / cand.dot(g.w), val, clamped

    def run(self, st: _Ascent, budget: int, pin: bool, max_regrids: int) -> _Ascent:
        spec, single = self.spec, self.single
        grid, v1, v2 = st.grid, st.v1, st.v2
        ev = _Evaluator(spec, grid)
        current = ev.pair_value(v1, v2)
        best = _Ascent(current, grid, v1, v2)
        residual, converged, clamped, regrids, it = np.inf, False, False, st.regrids, 0
        for it in range(1, budget + 1):
            start = current
            clamped = False
            if single:
                cand, val, c = self._block(ev, grid, v1, self.n_exp[0], None, True)
                if cand is not None and val > current:
                    v1 = v2 = cand
                    current = val
                clamped |= c
            else:
                cand, val, c = self._block(ev, grid, v2, self.n_exp[0], v2, True)
                if cand is not None and val > current:
                    v1, current = cand, val
                clamped |= c
                cand, val, c = self._block(ev, grid, v1, self.n_exp[1], v1, False)
                if cand is not None and val > current:
                    v2, current = cand, val
                clamped |= c
                # the relative scale of the two profiles is a slow mode of
                # the alternating sweep; search it directly
                cand, val = _dilation_move(ev, grid, v1, v2, current)
                if cand is not None:
                    v2, current = cand, val
            self.history.append(current)
            if current > best.value:
                best = _Ascent(current, grid, v1, v2)
            residual = (current - start) / abs(current)

            # common dilation is neutral in the continuum but the discrete
            # value gains from resolution, so iterates creep outwards; pin the
            # widest support just inside the multiplier clamp instead
            R = max(_support(v1, grid), _support(v2, grid))
            if pin and R < (self.sf - 0.1) * grid.r_max and regrids < max_regrids:
                regrids += 1
                grid = RadialGrid.uniform(grid.n, R / (self.sf - 0.01), grid.d)
                v1 = RadialDensity(best.grid, v1).remap(grid).values
                v2 = v1 if single else RadialDensity(best.grid, v2).remap(grid).values
                ev = _Evaluator(spec, grid)
                current = ev.pair_value(v1, v2)
                self.breaks.append(len(self.history))
                log.debug("pin regrid %d: r_max=%.4g value %.10g", regrids, grid.r_max, current)
                continue
            if residual < self.tol:
                converged = True
                break
        best.iterations = st.iterations + it
        best.residual = float(residual)
        best.converged = converged
        best.clamped = clamped
        best.regrids = regrids
        return best


def maximize(spec: ObjectiveSpec, grid: RadialGrid | None = None, max_iter: int = 10_000,
             tol: float = 1e-8, seed_profile=None, support_fraction: float = 0.95,
             seed_label: str = "gaussian", strict: bool = False,
             max_regrids: int = 40, max_expansions: int = 3) -> MaximizerResult:
    """Maximize the objective of ``spec`` over radial non-increasing pairs.

    ``seed_profile`` is a RadialDensity, a pair of them, or None for the unit
    Gaussian pair. Stops when the relative objective gain over one sweep
    drops below ``tol``. If ``max_iter`` runs out first the best iterate is
    returned with ``converged=False``, or NoConvergence is raised carrying
    it when ``strict``.

    The cell count is fixed but the spacing is not. The widest support is
    kept just inside ``support_fraction * r_max`` by conservative remaps;
    if the ascent stalls with a multiplier held at that clamp, a wider grid
    is tried and kept only if it pays off.
    """
    grid = grid or default_grid(d=spec.params.d)
    if grid.n < 64:
        raise InvalidSpec("the maximizer needs at least 64 cells")
    if grid.d != spec.params.d:
        raise InvalidSpec("grid dimension differs from the spec")
    if not 0.5 < support_fraction < 1:
        raise InvalidSpec("support_fraction must lie in (0.5, 1)")
    if seed_profile is None:
        seed_profile = _gaussian_seed(grid, 1.0)
    if isinstance(seed_profile, RadialDensity):
        seed_profile = (seed_profile, seed_profile)
    s1, s2 = seed_profile
    if not (s1.grid.same_as(grid) and s2.grid.same_as(grid)):
        raise InvalidSpec("seed profiles must live on the working grid")
    if spec.kind is Kind.PI and spec.theta0 < 0.5:
        # V_θ0[h1, h2] = V_{1-θ0}[h2, h1]; the ascent is better behaved with
        # the heavier weight on the first species
        mirror = ObjectiveSpec.pi(1.0 - spec.theta0, spec.params.d)
        res = maximize(mirror, grid, max_iter, tol, (s2, s1), support_fraction, seed_label,
                       strict, max_regrids, max_expansions)
        res.h1, res.h2 = res.h2, res.h1
        return res

    single = spec.kind is Kind.CSTAR
    v1 = rearrange_decreasing(s1).values.copy()
    v2 = v1 if single else rearrange_decreasing(s2).values.copy()
    if v1.dot(grid.w) <= 0 or v2.dot(grid.w) <= 0:
        raise ZeroProfile("seed profile is zero")
    v1 /= v1.dot(grid.w)
    v2 = v1 if single else v2 / v2.dot(grid.w)
    baseline = _Evaluator(spec, grid).pair_value(v1, v2)

    asc = _Ascender(spec, tol, support_fraction)
    asc.history.append(baseline)
    st = asc.run(_Ascent(baseline, grid, v1, v2), max_iter, True, max_regrids)
    expansions = 0
    while (st.converged and st.clamped and expansions < max_expansions
           and st.iterations < max_iter):
        expansions += 1
        wide = RadialGrid.uniform(st.grid.n, 1.5 * st.grid.r_max, st.grid.d)
        w1 = RadialDensity(st.grid, st.v1).remap(wide).values
        w2 = w1 if single else RadialDensity(st.grid, st.v2).remap(wide).values
        budget = min(60, max_iter - st.iterations)
        mark = len(asc.history)
        trial = asc.run(_Ascent(-np.inf, wide, w1, w2, st.iterations, regrids=st.regrids),
                        budget, False, 0)
        if not trial.value > st.value * (1 + 1e-6):
            # discard the trial segment
            del asc.history[mark:]
            asc.breaks = [b for b in asc.breaks if b < mark]
            break
        asc.breaks.append(mark)
        log.debug("expansion %d paid off: %.12g -> %.12g", expansions, st.value, trial.value)
        trial.value = -np.inf
        asc.breaks.append(len(asc.history))
        st = asc.run(trial, max_iter - trial.iterations, True, max_regrids)

    h1 = RadialDensity(st.grid, st.v1)
    h2 = h1 if single else RadialDensity(st.grid, st.v2)
    state = normalize_pair(MaximizerState(h1, h2), spec)
    result = MaximizerResult(constant=state.objective, h1=state.h1, h2=state.h2,
                             iterations=st.iterations, residual=st.residual,
                             grid=state.h1.grid, converged=st.converged, kind=spec.kind,
                             history=asc.history, grid_changes=asc.breaks, seed=seed_label,
                             baseline=baseline,
                             regrids=st.regrids)
    if not st.converged:
        msg = (f"maximize({spec.kind.value}) stopped at max_iter={max_iter} "
               f"with residual {st.residual:.3g}")
        if strict:
            raise NoConvergence(msg, result)
        log.warning(msg)
    return result


DEFAULT_SEED_WIDTHS = ((1.0, 1.0), (0.5, 0.5), (0.35, 1.4), (1.4, 0.35))


def seed_pairs(grid: RadialGrid, widths=DEFAULT_SEED_WIDTHS):
    """Gaussian seed pairs with the given widths, labelled for reporting."""
    out = []
    for w1, w2 in widths:
        out.append((f"gauss({w1:g},{w2:g})",
                    (_gaussian_seed(grid, w1), _gaussian_seed(grid, w2))))
    return out


def maximize_multi(spec: ObjectiveSpec, grid: RadialGrid | None = None, seeds=None,
                   **opts) -> MaximizerResult:
    """Best result over several seeds (extremals need not be unique).

    ``seeds`` is a list of ``(label, profile_or_pair)``; defaults to
    Gaussian pairs of equal and unequal widths. The returned result carries
    every seed's constant in ``seed_values``.
    """
    grid = grid or default_grid(d=spec.params.d)
    if seeds is None:
        seeds = seed_pairs(grid, ((1.0, 1.0), (0.5, 0.5)) if spec.kind is Kind.CSTAR
                           else DEFAULT_SEED_WIDTHS)
    best = None
    values = {}
    for label, seed in seeds:
        res = maximize(spec, grid=grid, seed_profile=seed, seed_label=label, **opts)
        values[label] = res.constant
        if best is None or res.constant > best.constant:
            best = res
    best.seed_values = values
    return best


def estimate_constant(spec: ObjectiveSpec, n: int = 512, r_max: float = 10.0,
                      seeds=None, **opts) -> MaximizerResult:
    """Multi-seed maximization at n and 2n cells; the error bar is the gap.

    The reported constant is the finer-grid value (still a feasible-point
    lower bound); ``error_bar`` is ``|C(2n) - C(n)|``, the Richardson
    estimate of the discretization error for a first-order-or-better scheme.
    """
    d = spec.params.d
    coarse = maximize_multi(spec, RadialGrid.uniform(n, r_max, d), seeds=seeds, **opts)
    fine = maximize_multi(spec, RadialGrid.uniform(2 * n, r_max, d), seeds=seeds, **opts)
    fine.error_bar = abs(fine.constant - coarse.constant)
    fine.coarse_constant = coarse.constant
    return fine
