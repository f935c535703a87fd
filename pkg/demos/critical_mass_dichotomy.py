"""Below and above the critical mass at m1 = m2 = 4/3, d = 3.

With equal masses the threshold is M_crit = (2/(c_d C_* (m*-1)))^{3/2}.
Half of it: the pair spreads and ‖u‖_{4/3} stays bounded. One and a half
times it, starting from the rescaled maximizer pair (which has negative free
energy): the second moment S falls linearly, dS/dt = I = 2F < 0, and the
core collapses until L^∞ grows past 10⁴ times its initial value. That
threshold is a numerical proxy for blow-up, not a proof.

    python demos/critical_mass_dichotomy.py [n]
"""

import sys
import time

import numpy as np

from critmass.criteria import critical_mass_equal, theorem13_verdict
from critmass.initdata import DataSpec, make, negative_energy_pair
from critmass.model import Parameters
from critmass.radial import RadialGrid
from critmass.solver import SolverConfig, run
from critmass.variational import ObjectiveSpec, estimate_constant

n = int(sys.argv[1]) if len(sys.argv) > 1 else 256
params = Parameters.intersection(3)
C = estimate_constant(ObjectiveSpec.cstar(), n=256)
Mcrit = critical_mass_equal(C.constant, params)
print(f"C_* ≈ {C.constant:.6f}, M_crit ≈ {Mcrit:.3f}")

grid = RadialGrid.uniform(n, 10.0, 3)
cfg = SolverConfig(params, grid, t_end=1.0, dt_init=1e-2, diag_every=20)
mu = 0.35       # spreads the data so the grid can resolve a 10⁴ amplitude increase

for factor in (0.5, 1.5):
    M = factor * Mcrit
    v = theorem13_verdict(M, M, C.constant, params)
    if factor < 1:
        u = make(DataSpec.rescaled_maximizer(C.h1, mu, M), grid)
        u1 = u2 = u
    else:
        u1, u2, F0 = negative_energy_pair(M, M, C, mu, grid, params)
    t = time.perf_counter()
    tr = run(u1, u2, cfg)
    S, F = tr.series("S"), tr.series("F")
    norm = tr.series("lm1") ** (3 / 4)
    print(f"\nM = {factor} M_crit: Σ = {v.evidence['sigma']:.3f}, predicted {v.outcome.value}")
    print(f"  stop: {tr.stop_reason.value} at t = {tr.final.t:.4f} after {tr.steps} steps "
          f"({time.perf_counter() - t:.1f} s)")
    print(f"  F: {F[0]:.4f} -> {F[-1]:.4f}, energy violations {tr.energy_violations}, "
          f"mass drift {tr.mass_drift:.1e}")
    print(f"  S: {S[0]:.4f} -> {S[-1]:.4f}, monotone decreasing: {bool(np.all(np.diff(S) < 0))}")
    print(f"  ‖u1‖_(4/3) max/initial = {norm.max() / norm[0]:.3f}, "
          f"L^∞ ratio {tr.summary()['final_linf'] / tr.initial_linf:.1f}")
