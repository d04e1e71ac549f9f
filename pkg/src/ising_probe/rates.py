"""Closed-form decay rates of the GHZ coherence.

Each spin i flips at two gap frequencies |J_i - omega| and |J_i + omega|
where J_i is its collective coupling.  Which of those flips are uphill
(absorption, weight n) or downhill (emission, weight n + 1) depends on the
sign and size of J_i relative to omega, giving the three coupling regimes.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .bath import BathContext, SpectralDensity
from .geometry import ClusterGeometry, spin_collective_couplings

BOUNDARY_RTOL = 1e-12


class Regime(enum.Enum):
    WEAK = "weak"
    STRONG_ANTIFERRO = "strong_afm"
    STRONG_FERRO = "strong_fm"
    BOUNDARY = "boundary"


def classify(collective: float, omega: float) -> Regime:
    if not omega > 0:
        raise ValueError("omega must be positive")
    band = BOUNDARY_RTOL * omega
    if abs(abs(collective) - omega) <= band:
        return Regime.BOUNDARY
    if collective > omega:
        return Regime.STRONG_FERRO
    if collective < -omega:
        return Regime.STRONG_ANTIFERRO
    return Regime.WEAK


def occupation(hbar_beta: float, omega):
    """Bose-Einstein occupation 1/(exp(hbar*beta*Omega) - 1).

    ``hbar_beta`` is the thermal time; infinity gives the zero-temperature
    value 0.  Omega must be strictly positive.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("occupation needs Omega > 0; the Omega -> 0 limit is boundary_rate_term's job")
    if math.isinf(hbar_beta):
        out = np.zeros_like(omega)
    else:
        with np.errstate(over="ignore"):
            out = 1.0 / np.expm1(hbar_beta * omega)
    return float(out) if out.ndim == 0 else out


def boundary_rate_term(spectral: SpectralDensity, hbar_beta: float) -> float:
    """Limit of 2*pi*f(D)*n(D) as the gap D -> 0+.

    Zero for super-Ohmic baths, 2*pi*A/(hbar*beta) for Ohmic and +inf for
    sub-Ohmic ones.  A zero-temperature or switched-off bath gives zero.
    """
    if spectral.amplitude == 0 or math.isinf(hbar_beta):
        return 0.0
    k = spectral.exponent
    if k > 1:
        return 0.0
    if k == 1:
        return 2 * math.pi * spectral.amplitude / hbar_beta
    return math.inf


def xi_from_components(regime: Regime, gamma_minus: float, gamma_plus: float,
                       n_minus: float, n_plus: float) -> float:
    """Combine bath couplings and occupations according to the regime."""
    if regime is Regime.WEAK:
        return gamma_minus * (n_minus + 1) + gamma_plus * n_plus
    if regime is Regime.STRONG_ANTIFERRO:
        return gamma_minus * (n_minus + 1) + gamma_plus * (n_plus + 1)
    if regime is Regime.STRONG_FERRO:
        return gamma_minus * n_minus + gamma_plus * n_plus
    raise ValueError("boundary rates need the limiting form")


@dataclass(frozen=True)
class SpinRate:
    collective: float
    gamma_minus: float
    gamma_plus: float
    n_minus: float
    n_plus: float
    xi: float
    regime: Regime


def spin_rate(collective: float, omega: float, bath: BathContext) -> SpinRate:
    """Full per-spin record; a gap that closes at the boundary is stored as nan."""
    regime = classify(collective, omega)
    tb = bath.hbar_beta
    f = bath.spectral
    gaps = (abs(collective - omega), abs(collective + omega))

    def couple(gap):
        if regime is Regime.BOUNDARY and gap <= 2 * BOUNDARY_RTOL * omega:
            return math.nan, math.nan
        return 2 * math.pi * f(gap), occupation(tb, gap)

    g_m, n_m = couple(gaps[0])
    g_p, n_p = couple(gaps[1])
    if regime is not Regime.BOUNDARY:
        return SpinRate(collective, g_m, g_p, n_m, n_p,
                        xi_from_components(regime, g_m, g_p, n_m, n_p), regime)

    singular = boundary_rate_term(f, tb)
    if collective > 0:
        # J -> omega: the regular flip is the uphill one at gap 2J
        regular = g_p * n_p
    else:
        # J -> -omega: the regular flip is the downhill one at gap 2*omega
        regular = g_m * (n_m + 1)
    return SpinRate(collective, g_m, g_p, n_m, n_p, singular + regular, regime)


def xi(collective: float, omega: float, bath: BathContext) -> tuple[float, Regime]:
    """Decay rate of one spin and its regime.

    At the boundary |J_i| = omega the rate is the continuous extension from
    the strong side; ``math.inf`` marks a sub-Ohmic divergence.
    """
    r = spin_rate(collective, omega, bath)
    return r.xi, r.regime


@dataclass(frozen=True)
class RateBundle:
    """Per-spin rates of one cluster and their average ``gamma``."""

    spins: tuple[SpinRate, ...]
    gamma: float

    @property
    def xi(self) -> np.ndarray:
        return np.array([s.xi for s in self.spins])

    @property
    def collective(self) -> np.ndarray:
        return np.array([s.collective for s in self.spins])

    @property
    def regimes(self) -> tuple[Regime, ...]:
        return tuple(s.regime for s in self.spins)

    @property
    def mixed(self) -> bool:
        return len(set(self.regimes)) > 1

    @property
    def regime(self) -> Regime | None:
        """Shared regime, or None for a mixed-regime cluster."""
        return None if self.mixed else self.spins[0].regime

    @property
    def diverged(self) -> bool:
        return math.isinf(self.gamma)


def average_rate_from_couplings(collective, omega: float, bath: BathContext) -> RateBundle:
    spins = tuple(spin_rate(float(c), omega, bath) for c in np.atleast_1d(collective))
    gamma = sum(s.xi for s in spins) / len(spins)
    return RateBundle(spins, gamma)


def average_rate(geom: ClusterGeometry, omega: float, bath: BathContext) -> RateBundle:
    """Average decay rate Gamma = mean of xi_i over the cluster."""
    return average_rate_from_couplings(spin_collective_couplings(geom), omega, bath)
