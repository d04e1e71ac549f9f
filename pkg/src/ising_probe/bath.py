"""Thermal bosonic bath described by a power-law spectral density."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .units import NATURAL, UnitSystem

ZERO_TEMPERATURE = math.inf


@dataclass(frozen=True)
class SpectralDensity:
    """f(Omega) = amplitude * Omega**exponent for Omega > 0.

    exponent 1 is Ohmic, 0 white noise and -1 is 1/f noise.  An amplitude of
    zero switches the bath off entirely.
    """

    amplitude: float
    exponent: float = 1.0

    def __post_init__(self):
        if not (self.amplitude >= 0 and math.isfinite(self.amplitude)):
            raise ValueError(f"spectral amplitude must be finite and >= 0, got {self.amplitude}")
        if not math.isfinite(self.exponent):
            raise ValueError("spectral exponent must be finite")

    @classmethod
    def ohmic(cls, amplitude: float = 1e-3) -> SpectralDensity:
        return cls(amplitude, 1.0)

    @classmethod
    def white(cls, amplitude: float = 1e-3) -> SpectralDensity:
        return cls(amplitude, 0.0)

    @classmethod
    def one_over_f(cls, amplitude: float = 1e-3) -> SpectralDensity:
        return cls(amplitude, -1.0)

    @classmethod
    def from_rate(cls, gamma: float) -> SpectralDensity:
        """White noise whose bath coupling 2*pi*f equals ``gamma`` at every gap."""
        return cls(gamma / (2 * math.pi), 0.0)

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        if np.any(omega <= 0):
            raise ValueError("spectral density is only defined for Omega > 0")
        out = self.amplitude * omega ** self.exponent
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BathContext:
    """Inverse temperature, spectral density and the units they are expressed in.

    ``beta = ZERO_TEMPERATURE`` (infinity) is the zero-temperature bath.
    """

    beta: float
    spectral: SpectralDensity
    units: UnitSystem = field(default=NATURAL)

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    @classmethod
    def from_temperature(cls, temperature: float, spectral: SpectralDensity,
                         units: UnitSystem = NATURAL) -> BathContext:
        return cls(units.beta_from_temperature(temperature), spectral, units)

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta)

    @property
    def hbar_beta(self) -> float:
        return self.units.thermal_time(self.beta)
