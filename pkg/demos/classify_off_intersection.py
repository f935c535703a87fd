"""Global existence versus blow-up criteria away from m1 = m2 = 4/3.

For exponents inside the p >= 1, q >= 1, r > 1 region the criteria compare
a quantity ℛ built from masses and ‖u_i‖^{m_i}_{m_i} against x0, the maximizer
of f(x) = x - Λ_θ x^s. The ratio ℛ/x0 does not depend on θ, so data on the
critical surface are classified Boundary for every θ. The demo walks a family
of Gaussian data across that surface.

    python demos/classify_off_intersection.py
"""


from critmass import criteria as cr
from critmass.initdata import DataSpec, make
from critmass.model import Parameters, classify_regime
from critmass.radial import RadialGrid, free_energy, lp_norm
from critmass.variational import ObjectiveSpec, estimate_constant

params = Parameters(3, 1.25, 1.25)
print(f"(m1, m2) = ({params.m1}, {params.m2}): regime {classify_regime(params).label.value}, "
      f"inside region: {cr.in_region_one_six(params)}")
alpha = 0.5 * cr.alpha_interval(params)[0]
beta = cr.beta_from_alpha(alpha, params)
print(f"α = {alpha:.4f}, β = {beta:.4f}, exponent sum s = {cr.exponent_sum(alpha, beta, params):.4f}, "
      f"exponent restriction holds: {cr.condition_17(alpha, beta, params)}")

lam = estimate_constant(ObjectiveSpec.lam(params, alpha, beta), n=256)
print(f"Λ* ≈ {lam.constant:.6f} ± {lam.error_bar:.1e}")

grid = RadialGrid.uniform(512, 10.0, 3)
print(f"\n{'sigma':>6} {'mass':>7} {'R/x0':>9} {'F0':>11}  verdict")
for sigma in (0.3, 0.6):
    for mass in (1.0, 10.0, 50.0, 200.0):
        u = make(DataSpec.gaussian(sigma, mass), grid)
        n1 = lp_norm(u, params.m1) ** params.m1
        F0 = free_energy(u, u, params).F
        v = cr.theorem12_verdict(mass, mass, n1, n1, F0, params, alpha, beta, lam.constant)
        ratio = v.evidence["R"] / v.evidence["x0"]
        print(f"{sigma:6.2f} {mass:7.1f} {ratio:9.4f} {F0:11.4f}  {v.outcome.value}")

print("\nData placed exactly on the critical surface:")
M1, M2, n2 = 2.0, 3.0, 1.7
l0, rhs = cr.critical_identity_sides(M1, M2, 0.0, n2, params, alpha, beta, lam.constant)
l1, _ = cr.critical_identity_sides(M1, M2, 1.0, n2, params, alpha, beta, lam.constant)
n1 = (rhs - l0) / (l1 - l0)
v = cr.theorem12_verdict(M1, M2, n1, n2, -1.0, params, alpha, beta, lam.constant)
print(f"  residual {cr.critical_identity_residual(M1, M2, n1, n2, params, alpha, beta, lam.constant):.2e}, "
      f"verdict {v.outcome.value}, same at every θ: {v.evidence['boundary_all_theta']}")
