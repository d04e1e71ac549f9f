"""Measurement statistics of the GHZ frequency-estimation protocol.

Each cluster of n spins starts in a GHZ state, evolves for a time t and is
read out with a binary parity-like measurement.  The outcome probability is

    p = 1/2 + 1/2 cos(n omega t + phi) exp(-n Gamma t / 2)

and with the bias phi = pi/2 - n omega0 t the Fisher information at the
operating point is n^2 t^2 exp(-n Gamma t).  The sensitivity of M clusters is
S = M F / t, maximised at t_opt = 1/(n Gamma) where it equals N/(e Gamma).

With dynamical decoupling (``cpmg=True``) the static part of omega is
refocused and only the oscillating deviation accumulates phase, at an
average efficiency of 2/pi.  The closed forms above are the effective ones
after averaging over the pulse sequence; every sensitivity picks up a factor
(2/pi)^2.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .bath import BathContext
from .geometry import ClusterGeometry, ProbeSpec
from .rates import RateBundle, Regime, average_rate

CPMG_FACTOR = (2 / math.pi) ** 2


class UninformativeMeasurement(ValueError):
    """The outcome probability is 0 or 1, so the measurement carries no information."""


class OptimumStatus(enum.Enum):
    FINITE = "finite"
    UNBOUNDED = "unbounded"
    DIVERGED = "diverged"


@dataclass(frozen=True)
class SensingRun:
    probe: ProbeSpec
    geom: ClusterGeometry
    bath: BathContext
    t: float = 0.0
    phi: float | None = None
    cpmg: bool = False

    def __post_init__(self):
        if self.geom.size != self.probe.cluster_size:
            raise ValueError(
                f"geometry has {self.geom.size} spins but the probe clusters have {self.probe.cluster_size}")
        if not self.t >= 0:
            raise ValueError("sensing time must be non-negative")

    @property
    def cluster_size(self) -> int:
        return self.geom.size

    @property
    def bias(self) -> float:
        if self.phi is not None:
            return self.phi
        return default_bias(self.cluster_size, self.probe.omega0, self.t)

    @property
    def signal_factor(self) -> float:
        return CPMG_FACTOR if self.cpmg else 1.0

    def rates(self) -> RateBundle:
        return average_rate(self.geom, self.probe.omega, self.bath)

    def at(self, **changes) -> SensingRun:
        return replace(self, **changes)


def default_bias(cluster_size: int, omega0: float, t: float) -> float:
    return math.pi / 2 - cluster_size * omega0 * t


@dataclass(frozen=True)
class Optimum:
    s_max: float
    t_opt: float
    status: OptimumStatus
    regime: Regime | None

    @property
    def unbounded(self) -> bool:
        return self.status is OptimumStatus.UNBOUNDED


@dataclass(frozen=True)
class HighBetaApprox:
    value: float
    valid: bool


@dataclass(frozen=True)
class SensitivityResult:
    p: float
    fisher: float
    s: float
    s_max: float
    t_opt: float
    regime: Regime | None
    status: OptimumStatus
    approx_high_beta: float | None


def _decay(cluster_size: int, gamma: float, t: float) -> float:
    if t == 0:
        return 1.0
    if math.isinf(gamma):
        return 0.0
    return math.exp(-cluster_size * gamma * t)


def probability(run: SensingRun, gamma: float | None = None) -> float:
    """Probability of outcome 0 after the sensing time ``run.t``."""
    if gamma is None:
        gamma = run.rates().gamma
    n = run.cluster_size
    probe = run.probe
    delta = (2 / math.pi) * probe.delta_omega if run.cpmg else probe.delta_omega
    if run.phi is None:
        # default bias cancels n*omega0*t exactly; avoids cancellation at long t
        phase = math.pi / 2 + n * delta * run.t
    else:
        phase = (probe.omega0 + delta) * n * run.t + run.phi
    envelope = math.sqrt(_decay(n, gamma, run.t))
    return 0.5 + 0.5 * math.cos(phase) * envelope


def fisher(run: SensingRun, gamma: float | None = None) -> float:
    """Closed-form Fisher information at the default operating point."""
    default = default_bias(run.cluster_size, run.probe.omega0, run.t)
    if run.phi is not None and not math.isclose(run.phi, default, abs_tol=1e-12):
        raise ValueError("the closed form needs the default bias; use fisher_numeric")
    if run.probe.delta_omega != 0:
        raise ValueError("the closed form is evaluated at delta_omega = 0")
    if gamma is None:
        gamma = run.rates().gamma
    n = run.cluster_size
    return run.signal_factor * n ** 2 * run.t ** 2 * _decay(n, gamma, run.t)


def fisher_numeric(run: SensingRun, step: float | None = None) -> float:
    """Fisher information of the binary outcome from central differences in omega.

    The bias phase is held fixed and the decay rate is recomputed at each shifted frequency.  The default step is
    ``1e-6 * omega0``, shortened to ``1e-3 / (n t)`` at long times so the
    fringe phase moves by at most a milliradian.
    """
    if step is None:
        h = 1e-6 * run.probe.omega0
        if run.t > 0:
            h = min(h, 1e-3 / (run.cluster_size * run.t))
    else:
        h = step
    dw = run.probe.delta_omega

    def p_at(d):
        # the bias depends on omega0 only, so it stays fixed as omega shifts
        return probability(run.at(probe=replace(run.probe, delta_omega=d)))

    p = p_at(dw)
    var = p * (1 - p)
    if var <= 1e-300:
        raise UninformativeMeasurement(f"p = {p!r} at this bias point")
    slope = (p_at(dw + h) - p_at(dw - h)) / (2 * h)
    return slope ** 2 / var


def _optimum(run: SensingRun, bundle: RateBundle) -> Optimum:
    gamma = bundle.gamma
    n_total = run.probe.n_spins
    if math.isinf(gamma):
        return Optimum(0.0, 0.0, OptimumStatus.DIVERGED, Regime.BOUNDARY)
    if gamma == 0:
        return Optimum(math.inf, math.inf, OptimumStatus.UNBOUNDED, bundle.regime)
    s_max = run.signal_factor * n_total / (math.e * gamma)
    return Optimum(s_max, 1.0 / (run.cluster_size * gamma), OptimumStatus.FINITE, bundle.regime)


def optimize(run: SensingRun) -> Optimum:
    """Maximum over t of the sensitivity and the time at which it occurs.

    A vanishing decay rate gives an unbounded optimum (S grows linearly in t);
    a divergent one at a sub-Ohmic boundary gives S_max = 0.
    """
    return _optimum(run, run.rates())


def high_beta_approx(run: SensingRun, bundle: RateBundle | None = None) -> HighBetaApprox:
    """Low-temperature estimate of S_max in the strong ferromagnetic regime.

    Replaces each occupation n(D) by exp(-hbar beta D).  Flagged valid once
    hbar*beta*(J - omega) exceeds 3 for every spin.
    """
    bundle = run.rates() if bundle is None else bundle
    if any(r is not Regime.STRONG_FERRO for r in bundle.regimes):
        raise ValueError("the high-beta form only applies to strong ferromagnetic coupling")
    tb = run.bath.hbar_beta
    omega = run.probe.omega
    terms = []
    for s in bundle.spins:
        if math.isinf(tb):
            terms.append(0.0)
            continue
        terms.append(s.gamma_minus * math.exp(-tb * abs(s.collective - omega))
                     + s.gamma_plus * math.exp(-tb * abs(s.collective + omega)))
    gamma = sum(terms) / len(terms)
    value = math.inf if gamma == 0 else run.signal_factor * run.probe.n_spins / (math.e * gamma)
    valid = all(tb * (s.collective - omega) > 3 for s in bundle.spins)
    return HighBetaApprox(value, valid)


def sensitivity(run: SensingRun) -> SensitivityResult:
    """Sensitivity S = M F / t at ``run.t`` together with its optimum over t."""
    if not run.t > 0:
        raise ValueError("sensitivity needs t > 0")
    bundle = run.rates()
    gamma = bundle.gamma
    n = run.cluster_size
    f = run.signal_factor * n ** 2 * run.t ** 2 * _decay(n, gamma, run.t)
    s = run.probe.clusters * f / run.t
    opt = _optimum(run, bundle)
    approx = None
    if bundle.regimes and all(r is Regime.STRONG_FERRO for r in bundle.regimes):
        approx = high_beta_approx(run, bundle).value
    return SensitivityResult(
        p=probability(run, gamma),
        fisher=f,
        s=s,
        s_max=opt.s_max,
        t_opt=opt.t_opt,
        regime=opt.regime,
        status=opt.status,
        approx_high_beta=approx,
    )
