"""Decay rates and frequency-estimation sensitivity of Ising-coupled GHZ spin probes."""
from .bath import ZERO_TEMPERATURE, BathContext, SpectralDensity
from .estimation import (CPMG_FACTOR, Optimum, OptimumStatus, SensingRun, SensitivityResult, fisher,
                         fisher_numeric, high_beta_approx, optimize, probability, sensitivity)
from .geometry import (NEAREST_NEIGHBOR_ONLY, ClusterGeometry, Distance, ProbeSpec, collective_coupling,
                       collective_coupling_uniform, coupling_matrix)
from .rates import RateBundle, Regime, average_rate, classify, occupation, xi
from .units import NATURAL, UnitSystem

__version__ = "0.1.0"

__all__ = [
    "ZERO_TEMPERATURE", "BathContext", "SpectralDensity", "CPMG_FACTOR", "Optimum", "OptimumStatus",
    "SensingRun", "SensitivityResult", "fisher", "fisher_numeric", "high_beta_approx", "optimize",
    "probability", "sensitivity", "NEAREST_NEIGHBOR_ONLY", "ClusterGeometry", "Distance", "ProbeSpec",
    "collective_coupling", "collective_coupling_uniform", "coupling_matrix", "RateBundle", "Regime",
    "average_rate", "classify", "occupation", "xi", "NATURAL", "UnitSystem",
]
