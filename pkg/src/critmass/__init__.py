"""Numerical laboratory for the two-species degenerate cross-attraction
chemotaxis system: radial simulation, sharp variational constants and the
critical-mass criteria."""

from .model import Parameters, Regime, classify_regime, scaling_exponents
from .radial import (EnergyReport, RadialDensity, RadialGrid, free_energy,
                     interaction_energy, lp_norm, newtonian_potential)

__version__ = "0.1.0"

__all__ = [
    "EnergyReport", "Parameters", "RadialDensity", "RadialGrid", "Regime",
    "classify_regime", "free_energy", "interaction_energy", "lp_norm",
    "newtonian_potential", "scaling_exponents",
]
