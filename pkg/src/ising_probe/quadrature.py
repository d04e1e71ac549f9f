"""Brute-force evaluation of the decay-rate integral.

The decay rate of spin i is

    xi_i = 2 Re int_0^inf dtau [C(tau) exp(-i tau (J_i - omega))
                                + C(-tau) exp(i tau (J_i + omega))]

with the thermal bath correlation function

    C(tau) = int_0^inf dOmega f(Omega) [coth(hbar beta Omega / 2) cos(Omega tau)
                                        - i sin(Omega tau)].

Nothing here knows about coupling regimes.  The tau integral is a half-line
Fourier transform, which only converges in the distributional sense, so it is
damped with exp(-eps tau).  For each Omega the damped tau integral is a
Laplace transform of cos/sin and is taken exactly; the Omega integral is done
numerically on a composite Gauss-Legendre grid whose nodes are packed
around the Lorentzian peaks of width eps.  The eps -> 0 limit is then taken by
Richardson extrapolation over successive halvings of eps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bath import BathContext


class ConvergenceError(RuntimeError):
    """The eps extrapolation did not settle to the requested tolerance."""


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    estimates: tuple[float, ...]
    eps: tuple[float, ...]
    change: float


def _coth_half(hbar_beta: float, omega: np.ndarray) -> np.ndarray:
    if math.isinf(hbar_beta):
        return np.ones_like(omega)
    x = 0.5 * hbar_beta * omega
    with np.errstate(over="ignore"):
        return 1.0 + 2.0 / np.expm1(2 * x)


def _gauss_nodes(a: float, b: float, pieces: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, pieces + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def omega_grid(peaks, eps: float, omega_min: float, omega_max: float,
               order: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes and weights on [omega_min, omega_max].

    Intervals touching a peak p use Omega = p +/- eps*sinh(u), which turns the
    Lorentzian eps/(eps^2 + (Omega - p)^2) into the smooth 1/cosh(u).  The
    remaining intervals use Omega = exp(u) so that infrared-singular spectra
    are resolved down to omega_min.
    """
    peaks = sorted(p for p in set(peaks) if omega_min < p < omega_max)
    cuts = {omega_min, omega_max}
    for p in peaks:
        cuts.update((p, max(omega_min, 0.5 * p), min(omega_max, 2.0 * p)))
    cuts = sorted(cuts)
    # separate neighbouring peaks so each interval has at most one peak endpoint
    refined = [cuts[0]]
    for a, b in zip(cuts[:-1], cuts[1:]):
        if a in peaks and b in peaks:
            refined.append(0.5 * (a + b))
        refined.append(b)

    nodes, weights = [], []
    for a, b in zip(refined[:-1], refined[1:]):
        if b <= a:
            continue
        if a in peaks or b in peaks:
            p = a if a in peaks else b
            ua, ub = np.arcsinh((a - p) / eps), np.arcsinh((b - p) / eps)
            pieces = max(1, int(math.ceil(ub - ua)))
            u, w = _gauss_nodes(ua, ub, pieces, order)
            nodes.append(p + eps * np.sinh(u))
            weights.append(w * eps * np.cosh(u))
        else:
            la, lb = math.log(a), math.log(b)
            pieces = max(1, int(math.ceil(2 * (lb - la))))
            u, w = _gauss_nodes(la, lb, pieces, order)
            nodes.append(np.exp(u))
            weights.append(w * np.exp(u))
    return np.concatenate(nodes), np.concatenate(weights)


def damped_half_fourier(spectral, hbar_beta: float, x: float, eps: float,
                        nodes: np.ndarray, weights: np.ndarray, reverse: bool = False) -> complex:
    """int_0^inf dtau exp(-eps tau + i x tau) C(+/-tau) on the given Omega grid.

    ``reverse`` selects C(-tau) = conj(C(tau)).
    """
    om = nodes
    f = spectral.amplitude * om ** spectral.exponent
    coth = _coth_half(hbar_beta, om)
    plus = 1.0 / (eps - 1j * (x + om))
    minus = 1.0 / (eps - 1j * (x - om))
    k_cos = 0.5 * (plus + minus)
    k_sin = (plus - minus) / 2j
    sign = 1.0 if reverse else -1.0
    return complex(np.sum(weights * f * (coth * k_cos + sign * 1j * k_sin)))


def _absolute_mass(spectral, hbar_beta, x1, x2, eps, nodes, weights) -> float:
    """Integral of |integrand|, the scale against which cancellation error is judged."""
    f = spectral.amplitude * nodes ** spectral.exponent
    coth = _coth_half(hbar_beta, nodes)
    lor = sum(eps / (eps ** 2 + (x - s * nodes) ** 2) for x in (x1, x2) for s in (1, -1))
    return float(np.sum(weights * f * coth * lor))


def regularized_xi(collective: float, omega: float, bath: BathContext, eps: float,
                   omega_min: float, omega_max: float, order: int = 32) -> float:
    """Decay-rate integral with the exp(-eps tau) damping left in place."""
    x1 = omega - collective
    x2 = collective + omega
    nodes, weights = omega_grid((abs(x1), abs(x2)), eps, omega_min, omega_max, order)
    tb = bath.hbar_beta
    h1 = damped_half_fourier(bath.spectral, tb, x1, eps, nodes, weights)
    h2 = damped_half_fourier(bath.spectral, tb, x2, eps, nodes, weights, reverse=True)
    return 2.0 * (h1 + h2).real


def _regularized_mass(collective, omega, bath, eps, omega_min, omega_max, order=32) -> float:
    x1, x2 = omega - collective, collective + omega
    nodes, weights = omega_grid((abs(x1), abs(x2)), eps, omega_min, omega_max, order)
    return 2.0 * _absolute_mass(bath.spectral, bath.hbar_beta, x1, x2, eps, nodes, weights)


def richardson(values, ratio: float = 2.0) -> list[float]:
    """Diagonal of the Richardson table for values at h, h/ratio, h/ratio^2, ...

    Assumes an error expansion in integer powers of h.
    """
    table = [list(values)]
    for k in range(1, len(values)):
        prev = table[-1]
        fac = ratio ** k
        table.append([(fac * prev[i + 1] - prev[i]) / (fac - 1) for i in range(len(prev) - 1)])
    return [row[0] for row in table]


def default_cutoffs(collective: float, omega: float, bath: BathContext) -> tuple[float, float]:
    scale = max(abs(collective - omega), abs(collective + omega))
    if not bath.zero_temperature:
        scale = max(scale, 1.0 / bath.hbar_beta)
    return 1e-6 * omega, 20.0 * scale


def xi_quadrature_oracle(collective: float, omega: float, bath: BathContext, *,
                         omega_max: float | None = None, omega_min: float | None = None,
                         eps0: float | None = None, levels: int = 4, order: int = 32,
                         rtol: float = 1e-3) -> QuadratureResult:
    """Numerical decay rate, extrapolated to vanishing damping.

    Parameters
    ----------
    collective, omega : float
        Collective coupling of the spin and spin frequency.
    bath : BathContext
    omega_max, omega_min : float, optional
        Cutoffs of the Omega integral.  Defaults are ``20 * max(|J +/- omega|,
        1/(hbar beta))`` and ``1e-6 * omega``.
    eps0 : float, optional
        Largest damping rate; ``levels`` halvings of it are used.  Defaults to
        ``1e-5`` times the smaller gap.
    order : int
        Gauss-Legendre order per sub-interval (the grid size knob).
    rtol : float
        Maximum relative change between the last two extrapolants before
        ``ConvergenceError`` is raised.
    """
    lo, hi = default_cutoffs(collective, omega, bath)
    omega_min = lo if omega_min is None else omega_min
    omega_max = hi if omega_max is None else omega_max
    gap = min(abs(collective - omega), abs(collective + omega))
    if gap <= 0:
        raise ValueError("the quadrature oracle needs both gaps to be open")
    if eps0 is None:
        eps0 = 1e-5 * gap
    if levels < 2:
        raise ValueError("need at least two damping levels to extrapolate")
    eps = tuple(eps0 / 2 ** k for k in range(levels))
    values = tuple(regularized_xi(collective, omega, bath, e, omega_min, omega_max, order) for e in eps)
    value = richardson(values)[-1]
    # same-order extrapolants from the coarser and finer windows of eps
    if levels > 2:
        change = abs(richardson(values[1:])[-1] - richardson(values[:-1])[-1])
    else:
        change = abs(values[1] - values[0])
    # the damped integrals can be far larger than the limit; cancellation sets a floor
    mass = _regularized_mass(collective, omega, bath, eps[-1], omega_min, omega_max, order)
    floor = 1e-11 * max(max(abs(v) for v in values), mass)
    if change > rtol * abs(value) + floor:
        raise ConvergenceError(f"eps extrapolation changed by {change:.3e} (value {value:.6e})")
    return QuadratureResult(value, values, eps, change)
