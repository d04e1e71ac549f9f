"""Superconducting flux-qubit worked examples in SI units.

Quoted "GHz" values are taken as angular frequencies (rad/s = value * 1e9).
The relaxation rates 1/T1 are given per gap, so each variant is modelled as
white noise whose 2*pi*f equals that rate.  All variants use dynamical
decoupling and a 20 mK bath.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .bath import BathContext, SpectralDensity
from .estimation import CPMG_FACTOR, Optimum, SensingRun, optimize
from .geometry import ClusterGeometry, ProbeSpec
from .units import UnitSystem

GHZ = 1e9
TEMPERATURE = 0.020


@dataclass(frozen=True)
class FluxVariant:
    name: str
    n_qubits: int
    omega0: float
    coupling: float
    t1: float
    expected: float
    description: str

    def run(self) -> SensingRun:
        units = UnitSystem.si(self.omega0)
        bath = BathContext.from_temperature(TEMPERATURE, SpectralDensity.from_rate(1 / self.t1), units)
        geom = ClusterGeometry(self.n_qubits, alpha=0.0, coupling=self.coupling)
        probe = ProbeSpec(self.n_qubits, 1, self.omega0)
        return SensingRun(probe, geom, bath, cpmg=True)


VARIANTS = {
    v.name: v
    for v in (
        FluxVariant("weak2", 2, 5 * GHZ, 0.0, 30e-6, 7e-6,
                    "two uncoupled qubits at 5 GHz, T1 = 30 us"),
        FluxVariant("strongFM2", 2, 2 * GHZ, 5 * GHZ, 20e-6, 11e-6,
                    "two qubits at 2 GHz with J = 5 GHz, T1 = 20 us at both gaps"),
        FluxVariant("noninteracting4", 4, 5 * GHZ, 0.0, 30e-6, 14e-6,
                    "four uncoupled qubits at 5 GHz, T1 = 30 us"),
        FluxVariant("strongFM4", 4, 2 * GHZ, 5 * GHZ, 2e-6, 140e-6,
                    "four all-to-all qubits at 2 GHz, J = 5 GHz (collective 15 GHz), T1 = 2 us"),
    )
}


@dataclass(frozen=True)
class FluxReport:
    variant: FluxVariant
    collective: float
    gamma: float
    optimum: Optimum

    def as_dict(self) -> dict:
        v = self.variant
        return {
            "variant": v.name,
            "description": v.description,
            "n_qubits": v.n_qubits,
            "omega0_rad_s": v.omega0,
            "coupling_rad_s": v.coupling,
            "collective_coupling_rad_s": self.collective,
            "t1_s": v.t1,
            "temperature_K": TEMPERATURE,
            "cpmg_factor": CPMG_FACTOR,
            "gamma_s": self.gamma,
            "regime": self.optimum.regime.value if self.optimum.regime else "mixed",
            "s_max_per_hz": self.optimum.s_max,
            "t_opt_s": self.optimum.t_opt,
            "reference_s_max_per_hz": v.expected,
        }


def flux_scenario(name: str) -> FluxReport:
    try:
        variant = VARIANTS[name]
    except KeyError:
        raise KeyError(f"unknown flux variant {name!r}; choose from {sorted(VARIANTS)}") from None
    run = variant.run()
    bundle = run.rates()
    opt = optimize(run)
    return FluxReport(variant, float(bundle.collective[0]), bundle.gamma, opt)


def relative_error(report: FluxReport) -> float:
    return abs(report.optimum.s_max / report.variant.expected - 1) if math.isfinite(report.optimum.s_max) else math.inf
