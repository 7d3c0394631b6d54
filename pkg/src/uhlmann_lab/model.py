"""Qi-Wu-Zhang two-band model: Bloch vector, Hamiltonian, eigensystem, phase diagram.

Conventions used everywhere in this package:
  d(k, m) = (sin kx, sin ky, m + cos kx + cos ky),  H = d . sigma
  sigma_z = diag(1, -1); energies are -|d| (lower band) and +|d| (upper band)
  n = d/|d|; the analytic Chern number is -sgn(m) for 0 < |m| < 2, else 0.
The first Brillouin zone is [-pi, pi]^2; momenta outside are wrapped back in.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import CriticalParameter, DegeneratePoint

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
I2 = np.eye(2, dtype=complex)

CRITICAL_MASSES = (-2.0, 0.0, 2.0)

DEGENERACY_TOL = 1e-12
# below this, an eigenvector component no longer anchors the gauge
GAUGE_TOL = 1e-8


class MomentumPoint(NamedTuple):
    kx: float
    ky: float


@dataclass(frozen=True)
class ModelParams:
    m: float

    @property
    def critical(self) -> bool:
        return any(abs(self.m - mc) < DEGENERACY_TOL for mc in CRITICAL_MASSES)


@dataclass(frozen=True)
class MomentumGrid:
    """Rectangular BZ sampling, both endpoints included in each direction.

    The ky row doubles as loop samples: the last point (+pi) is identified
    with the first (-pi) when a closed loop is built from a grid row.
    """

    kxs: np.ndarray
    kys: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.kxs), len(self.kys)


def momentum_grid(nkx: int = 101, nky: int = 201) -> MomentumGrid:
    """Inclusive linspace grid over the zone. Experiment-level grids are
    required to be >= 21 per axis by the runner config; smaller grids stay
    legal here (transition probes build single-row MomentumGrids directly)."""
    if nkx < 2 or nky < 2:
        raise ValueError(f"grid {nkx}x{nky} is empty")
    return MomentumGrid(
        kxs=np.linspace(-np.pi, np.pi, nkx),
        kys=np.linspace(-np.pi, np.pi, nky),
    )


def reduce_to_zone(k) -> MomentumPoint:
    """Wrap both components into [-pi, pi] (pi maps to pi, not -pi)."""
    kx, ky = float(k[0]), float(k[1])
    rx = kx - 2.0 * np.pi * np.floor((kx + np.pi) / (2.0 * np.pi))
    ry = ky - 2.0 * np.pi * np.floor((ky + np.pi) / (2.0 * np.pi))
    if rx == -np.pi and kx != rx:
        rx = np.pi
    if ry == -np.pi and ky != ry:
        ry = np.pi
    return MomentumPoint(rx, ry)


def bloch_vector(k, m: float) -> np.ndarray:
    kx, ky = k
    return np.array([np.sin(kx), np.sin(ky), m + np.cos(kx) + np.cos(ky)])


def hamiltonian(k, m: float) -> np.ndarray:
    dx, dy, dz = bloch_vector(k, m)
    return dx * SX + dy * SY + dz * SZ


class EigenSystem(NamedTuple):
    energy: float          # |d|, the upper band energy
    n: np.ndarray          # unit Bloch vector d/|d|
    lower: np.ndarray      # eigenvector at -|d|
    upper: np.ndarray      # eigenvector at +|d|


def _lower_eigenvector(d: np.ndarray, energy: float) -> np.ndarray:
    """Lower-band eigenvector of d.sigma, gauge-fixed.

    Two algebraic constructions cover the two poles where one of them
    degenerates (d near +z or -z); the larger-norm one is kept. Gauge: the
    first component with modulus >= GAUGE_TOL is made real positive.
    """
    dx, dy, dz = d
    v1 = np.array([dz - energy, dx + 1j * dy])
    v2 = np.array([-(dx - 1j * dy), dz + energy])
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    v = v / np.linalg.norm(v)
    anchor = v[0] if abs(v[0]) >= GAUGE_TOL else v[1]
    return v * (np.conj(anchor) / abs(anchor))


def eigensystem(k, m: float) -> EigenSystem:
    """Energies, unit Bloch vector and orthonormal band eigenvectors at (k, m).

    Raises
    ------
    DegeneratePoint
        when |d| < 1e-12, i.e. at a gap-closing momentum.
    """
    d = bloch_vector(k, m)
    energy = float(np.linalg.norm(d))
    if energy < DEGENERACY_TOL:
        raise DegeneratePoint(k, m, energy)
    n = d / energy
    lower = _lower_eigenvector(d, energy)
    # upper band: orthogonal complement, same gauge rule
    upper = np.array([-np.conj(lower[1]), np.conj(lower[0])])
    anchor = upper[0] if abs(upper[0]) >= GAUGE_TOL else upper[1]
    upper = upper * (np.conj(anchor) / abs(anchor))
    return EigenSystem(energy=energy, n=n, lower=lower, upper=upper)


def hamiltonian_chern(m: float) -> int:
    """Analytic Chern number of the lower band: -sgn(m) inside |m| < 2."""
    if any(abs(m - mc) < DEGENERACY_TOL for mc in CRITICAL_MASSES):
        raise CriticalParameter(m)
    if 0.0 < abs(m) < 2.0:
        return -int(np.sign(m))
    return 0


def ground_state_density(k, m: float) -> np.ndarray:
    """Projector onto the lower band: rho = (1 - n.sigma)/2."""
    d = bloch_vector(k, m)
    energy = float(np.linalg.norm(d))
    if energy < DEGENERACY_TOL:
        raise DegeneratePoint(k, m, energy)
    n = d / energy
    return 0.5 * (I2 - (n[0] * SX + n[1] * SY + n[2] * SZ))


# ---------------------------------------------------------------------------
# batched helpers over momentum grids (hot paths; same math as above)

def bloch_field(kxs: np.ndarray, kys: np.ndarray, m: float) -> np.ndarray:
    """d(k, m) on the product grid, shape (nkx, nky, 3)."""
    kxg, kyg = np.meshgrid(kxs, kys, indexing="ij")
    return np.stack(
        [np.sin(kxg), np.sin(kyg), m + np.cos(kxg) + np.cos(kyg)], axis=-1
    )


def lower_band_vectors(d: np.ndarray) -> np.ndarray:
    """Vectorized _lower_eigenvector over a (..., 3) Bloch field."""
    energy = np.linalg.norm(d, axis=-1)
    dx, dy, dz = d[..., 0], d[..., 1], d[..., 2]
    v1 = np.stack([dz - energy, dx + 1j * dy], axis=-1)
    v2 = np.stack([-(dx - 1j * dy), dz + energy], axis=-1)
    n1 = np.linalg.norm(v1, axis=-1)
    n2 = np.linalg.norm(v2, axis=-1)
    v = np.where((n1 >= n2)[..., None], v1, v2)
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    anchor = np.where(np.abs(v[..., 0]) >= GAUGE_TOL, v[..., 0], v[..., 1])
    return v * (np.conj(anchor) / np.abs(anchor))[..., None]


def density_from_bloch(s: np.ndarray) -> np.ndarray:
    """rho = (1 + s.sigma)/2 for an (..., 3) real Bloch-vector field."""
    sx, sy, sz = s[..., 0], s[..., 1], s[..., 2]
    rho = np.empty(s.shape[:-1] + (2, 2), dtype=complex)
    rho[..., 0, 0] = 0.5 * (1.0 + sz)
    rho[..., 1, 1] = 0.5 * (1.0 - sz)
    rho[..., 0, 1] = 0.5 * (sx - 1j * sy)
    rho[..., 1, 0] = 0.5 * (sx + 1j * sy)
    return rho


def bloch_from_density(rho: np.ndarray) -> np.ndarray:
    """Inverse of density_from_bloch; returns the real (..., 3) field."""
    sx = 2.0 * rho[..., 1, 0].real
    sy = 2.0 * rho[..., 1, 0].imag
    sz = (rho[..., 0, 0] - rho[..., 1, 1]).real
    return np.stack([sx, sy, sz], axis=-1)
