"""Cluster geometry for the 1-d power-law Ising chain.

Spins are labelled 1..n in the public API.  Coupling between spins i and j is
``J * d(i, j) ** -alpha`` where d is either the literal index distance
``|i - j|`` or the shortest distance around a ring of n sites.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

NEAREST_NEIGHBOR_ONLY = math.inf


class Distance(enum.Enum):
    LITERAL = "literal"
    CIRCULAR = "circular"


@dataclass(frozen=True)
class ClusterGeometry:
    """Size, range exponent and base coupling of one cluster.

    ``alpha = math.inf`` (``NEAREST_NEIGHBOR_ONLY``) keeps only pairs at
    distance one.
    """

    size: int
    alpha: float = 0.0
    coupling: float = 0.0
    distance: Distance = Distance.LITERAL

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ValueError(f"cluster size must be a positive integer, got {self.size}")
        if math.isnan(self.alpha) or self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not math.isfinite(self.coupling):
            raise ValueError("coupling must be finite")
        object.__setattr__(self, "size", int(self.size))
        object.__setattr__(self, "distance", Distance(self.distance))


@dataclass(frozen=True)
class ProbeSpec:
    """N probe spins split into ``clusters`` groups of identical size."""

    n_spins: int
    clusters: int = 1
    omega0: float = 1.0
    delta_omega: float = 0.0

    def __post_init__(self):
        if self.n_spins < 1 or self.clusters < 1:
            raise ValueError("n_spins and clusters must be positive")
        if self.n_spins % self.clusters:
            raise ValueError(f"{self.n_spins} spins cannot form {self.clusters} equal clusters")
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        if not self.omega > 0:
            raise ValueError("omega = omega0 + delta_omega must be positive")

    @property
    def cluster_size(self) -> int:
        return self.n_spins // self.clusters

    @property
    def omega(self) -> float:
        return self.omega0 + self.delta_omega


def _distance_factor(d: np.ndarray, alpha: float) -> np.ndarray:
    if math.isinf(alpha):
        return (d == 1).astype(float)
    out = np.zeros(d.shape)
    mask = d > 0
    out[mask] = d[mask].astype(float) ** -alpha
    return out


def distance_matrix(size: int, distance: Distance = Distance.LITERAL) -> np.ndarray:
    idx = np.arange(size)
    d = np.abs(idx[:, None] - idx[None, :])
    if Distance(distance) is Distance.CIRCULAR:
        d = np.minimum(d, size - d)
    return d


def coupling_matrix(geom: ClusterGeometry) -> np.ndarray:
    """Symmetric ``size x size`` matrix of pair couplings; zero diagonal."""
    d = distance_matrix(geom.size, geom.distance)
    jij = geom.coupling * _distance_factor(d, geom.alpha)
    np.fill_diagonal(jij, 0.0)
    return jij


def collective_couplings(geom: ClusterGeometry) -> np.ndarray:
    """Row sums of the coupling matrix, one per spin."""
    return coupling_matrix(geom).sum(axis=1)


def collective_coupling(geom: ClusterGeometry, i: int) -> float:
    """Collective coupling of spin ``i`` (1-based) to the rest of its cluster."""
    if not 1 <= i <= geom.size:
        raise IndexError(f"spin index {i} outside 1..{geom.size}")
    return float(collective_couplings(geom)[i - 1])


def collective_coupling_uniform(geom: ClusterGeometry) -> float:
    """The single collective coupling shared by every spin of the cluster.

    With the literal distance convention this is the row of the reference spin
    floor(n/2) (1-based), as used for the periodic chain.  On a ring all rows
    are equal and the common value is returned.
    """
    if geom.size == 1:
        return 0.0
    if geom.distance is Distance.LITERAL:
        return collective_coupling(geom, geom.size // 2)
    rows = collective_couplings(geom)
    if not np.allclose(rows, rows[0], rtol=1e-12, atol=1e-12 * abs(geom.coupling)):
        raise AssertionError("ring couplings are not translation invariant")
    return float(rows[0])


def unit_collective_coupling(size: int, alpha: float, distance: Distance = Distance.LITERAL) -> float:
    """Collective coupling for J = 1, used to map a target value back to J."""
    return collective_coupling_uniform(ClusterGeometry(size, alpha, 1.0, distance))


def spin_collective_couplings(geom: ClusterGeometry) -> np.ndarray:
    """Collective coupling assigned to each spin when computing decay rates.

    Under the literal convention the chain is treated as periodic with every
    spin sharing the reference-spin value; on a ring the row sums are used.
    """
    if geom.distance is Distance.LITERAL:
        return np.full(geom.size, collective_coupling_uniform(geom))
    return collective_couplings(geom)
