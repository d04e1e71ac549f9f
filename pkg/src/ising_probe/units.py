"""Unit systems.

Natural units set hbar = k_B = 1 and measure every frequency in units of the
reference frequency omega0.  SI units use angular frequencies in s^-1,
temperatures in kelvin and CODATA values of hbar and k_B.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy import constants

HBAR_SI = constants.hbar
KB_SI = constants.k


class UnitMode(enum.Enum):
    NATURAL = "natural"
    SI = "si"


@dataclass(frozen=True)
class UnitSystem:
    """A unit convention plus the SI value of omega0 used for conversions.

    ``omega0_si`` only matters when converting between the two modes; it is
    the angular frequency (s^-1) that natural frequency 1 corresponds to.
    """

    mode: UnitMode = UnitMode.NATURAL
    omega0_si: float = 1.0

    def __post_init__(self):
        if not self.omega0_si > 0:
            raise ValueError("omega0_si must be positive")

    @classmethod
    def natural(cls, omega0_si: float = 1.0) -> UnitSystem:
        return cls(UnitMode.NATURAL, omega0_si)

    @classmethod
    def si(cls, omega0_si: float = 1.0) -> UnitSystem:
        return cls(UnitMode.SI, omega0_si)

    @property
    def is_si(self) -> bool:
        return self.mode is UnitMode.SI

    @property
    def hbar(self) -> float:
        return HBAR_SI if self.is_si else 1.0

    @property
    def k_b(self) -> float:
        return KB_SI if self.is_si else 1.0

    def thermal_time(self, beta: float) -> float:
        """hbar*beta, the time scale that multiplies frequencies in n(Omega)."""
        return self.hbar * beta

    def beta_from_temperature(self, temperature: float) -> float:
        if temperature < 0:
            raise ValueError("temperature must be non-negative")
        if temperature == 0:
            return math.inf
        return 1.0 / (self.k_b * temperature)

    # Conversions from natural numbers (units of omega0, hbar = k_B = 1) to SI.
    def frequency_to_si(self, value: float) -> float:
        return value * self.omega0_si

    def frequency_from_si(self, value: float) -> float:
        return value / self.omega0_si

    def time_to_si(self, value: float) -> float:
        return value / self.omega0_si

    def time_from_si(self, value: float) -> float:
        return value * self.omega0_si

    def temperature_to_si(self, value: float) -> float:
        """Natural temperature k_B T / (hbar omega0) to kelvin."""
        return value * HBAR_SI * self.omega0_si / KB_SI

    def temperature_from_si(self, value: float) -> float:
        return value * KB_SI / (HBAR_SI * self.omega0_si)

    def beta_to_si(self, value: float) -> float:
        """Natural beta (units of 1/(hbar omega0)) to SI beta in J^-1."""
        return value / (HBAR_SI * self.omega0_si)

    def beta_from_si(self, value: float) -> float:
        return value * HBAR_SI * self.omega0_si


NATURAL = UnitSystem.natural()
