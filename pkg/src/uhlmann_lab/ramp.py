"""Exponential mass ramp m(t) and the avoided-crossing analytics tied to it.

m(t) = m_i + (m_f - m_i)(1 - e^{-vt}) runs from m_i to m_f at rate v. Where
the ramp crosses a phase boundary m_c the gap closes at the matching momentum
k_c and the sweep there is effectively linear with Landau-Zener velocity
v_LZ = v |m_f - m_c|. The excitation probability at momentum k near k_c is
P = exp(-pi |k - k_c|^2 / v_LZ), distances taken on the torus.

The analytic P here is an oracle for cross-checking populations from the full
integrator, not a substitute for them; both paths are kept live in the tests.
The formula is the isotropic linearization at k_c and is not meant to be
extrapolated beyond |k - k_c| of order 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedMultiCrossing
from .model import CRITICAL_MASSES, MomentumPoint


@dataclass(frozen=True)
class RampProtocol:
    """(m_i, m_f, v). The degenerate case v = 0 freezes m(t) at m_i exactly
    (the exponential never moves), which is how static-Hamiltonian runs are
    expressed; for v > 0 the endpoints must differ."""

    m_i: float
    m_f: float
    v: float

    def __post_init__(self):
        if self.v < 0.0:
            raise ValueError(f"ramp rate v = {self.v} must be >= 0")
        if self.v > 0.0 and self.m_i == self.m_f:
            raise ValueError("m_i = m_f with v > 0: not a ramp")


@dataclass(frozen=True)
class CriticalCrossing:
    m_c: float
    k_c: MomentumPoint
    t_c: float
    v_lz: float


def m_of_t(p: RampProtocol, t) -> float | np.ndarray:
    """Mass at time t >= 0; accepts scalars or arrays."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("t must be >= 0")
    m = p.m_i + (p.m_f - p.m_i) * (1.0 - np.exp(-p.v * t))
    return float(m) if m.ndim == 0 else m


# gap-closing momenta per boundary; m_c = 0 closes at two momenta
_CLOSING_MOMENTA = {
    -2.0: (MomentumPoint(0.0, 0.0),),
    0.0: (MomentumPoint(0.0, np.pi), MomentumPoint(np.pi, 0.0)),
    2.0: (MomentumPoint(np.pi, np.pi),),
}


def critical_crossings(p: RampProtocol) -> list[CriticalCrossing]:
    """All boundary crossings of the ramp, ordered by crossing time.

    One entry per gap-closing momentum: the m_c = 0 boundary contributes two.
    Empty when no boundary lies strictly between m_i and m_f (or v = 0).
    """
    if p.v == 0.0:
        return []
    lo, hi = sorted((p.m_i, p.m_f))
    out = []
    for m_c in CRITICAL_MASSES:
        if not lo < m_c < hi:
            continue
        t_c = np.log((p.m_f - p.m_i) / (p.m_f - m_c)) / p.v
        v_lz = p.v * abs(p.m_f - m_c)
        for k_c in _CLOSING_MOMENTA[m_c]:
            out.append(CriticalCrossing(m_c=m_c, k_c=k_c, t_c=float(t_c), v_lz=float(v_lz)))
    out.sort(key=lambda c: (c.t_c, c.k_c))
    return out


def single_crossing(p: RampProtocol) -> CriticalCrossing:
    """The one crossing of a single-boundary ramp.

    Closed-form helpers downstream assume exactly one avoided crossing;
    ramps that cross several boundaries are only handled by the integrator.
    """
    crossings = critical_crossings(p)
    if len(crossings) != 1:
        raise UnsupportedMultiCrossing(
            f"ramp ({p.m_i} -> {p.m_f}) has {len(crossings)} crossings, need exactly 1"
        )
    return crossings[0]


def _torus_dist2(k, k_c) -> float | np.ndarray:
    dx = np.mod(np.asarray(k[0]) - k_c[0] + np.pi, 2.0 * np.pi) - np.pi
    dy = np.mod(np.asarray(k[1]) - k_c[1] + np.pi, 2.0 * np.pi) - np.pi
    return dx * dx + dy * dy


def lz_probability(k, crossing: CriticalCrossing) -> float | np.ndarray:
    """Excitation probability exp(-pi |k - k_c|^2 / v_LZ), toroidal distance."""
    p = np.exp(-np.pi * _torus_dist2(k, crossing.k_c) / crossing.v_lz)
    return float(p) if np.ndim(p) == 0 else p


def r_of_k(k, crossing: CriticalCrossing) -> float | np.ndarray:
    """Population imbalance r = 2 P_LZ - 1 in [-1, 1]; +1 at k_c."""
    return 2.0 * lz_probability(k, crossing) - 1.0
