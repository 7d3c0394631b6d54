"""Closed forms for the holonomy loop through the gap-closing momentum.

Everything here lives on the kx = 0 loop for a ramp terminating at m_f after
crossing m_c = -2 at k_c = (0, 0). On that loop the Bloch vector of H(m_f) is
planar, so transport reduces to a single angle alpha(ky) and the ordered
product collapses to a 2x2 matrix in the (upper, lower) band basis whose
entries depend only on the transport angle Theta and the initial band
populations. Loops through the other critical momenta are covered by the
general numeric pipeline, not by these formulas.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularDenominator, UndefinedAngle, UndefinedPhase
from .ramp import RampProtocol, r_of_k, single_crossing

_PLANAR_TOL = 1e-12
_PHASE_TOL = 1e-12


def planar_angle(ky, m_f: float):
    """Angle of the in-plane field (m_f + 1 + cos ky, sin ky) at kx = 0.

    Accepts scalar or array ky. The field vanishes only for m_f in {-2, 0}
    at isolated ky; there the angle is undefined and UndefinedAngle is raised.
    """
    ky = np.asarray(ky, dtype=float)
    rx = m_f + 1.0 + np.cos(ky)
    ry = np.sin(ky)
    if np.any(np.hypot(rx, ry) <= _PLANAR_TOL):
        raise UndefinedAngle(f"planar field vanishes on the loop at m_f = {m_f}")
    out = np.arctan2(ry, rx)
    return float(out) if out.ndim == 0 else out


def d_planar_angle(ky, m_f: float):
    """d alpha / d ky.

    With a = m_f + 1 the derivative of atan2(sin ky, a + cos ky) is

        (1 + a cos ky) / (1 + a^2 + 2 a cos ky),

    whose denominator is the squared field norm; it degenerates exactly where
    planar_angle is undefined.
    """
    ky = np.asarray(ky, dtype=float)
    a = m_f + 1.0
    denom = 1.0 + a * a + 2.0 * a * np.cos(ky)
    if np.any(denom <= _PLANAR_TOL):
        raise SingularDenominator(f"planar field norm vanishes on the loop at m_f = {m_f}")
    out = (1.0 + a * np.cos(ky)) / denom
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CriticalProfile:
    """Population imbalance r(kx=0, ky) sampled along the loop at final mass m_f.

    r comes either from the closed-form Landau-Zener expression (lz_profile)
    or from band populations of an evolved state field.
    """

    m_f: float
    ky_samples: np.ndarray
    r_profile: np.ndarray

    def __post_init__(self):
        kys = np.asarray(self.ky_samples, dtype=float)
        r = np.asarray(self.r_profile, dtype=float)
        if kys.ndim != 1 or kys.size < 2:
            raise ValueError("ky_samples must be a 1-d array with at least 2 points")
        if r.shape != kys.shape:
            raise ValueError(f"r_profile shape {r.shape} != ky_samples shape {kys.shape}")
        if np.any(np.diff(kys) <= 0.0):
            raise ValueError("ky_samples must be strictly increasing")
        if kys[0] < -np.pi - 1e-9 or kys[-1] > np.pi + 1e-9:
            raise ValueError("ky_samples must lie inside [-pi, pi]")
        if np.any(np.abs(r) > 1.0 + 1e-12):
            raise ValueError("|r| > 1 in r_profile")
        object.__setattr__(self, "ky_samples", kys)
        object.__setattr__(self, "r_profile", r)


def lz_profile(p: RampProtocol, ky_samples) -> CriticalProfile:
    """Closed-form post-crossing profile r(0, ky) for a single-crossing ramp."""
    crossing = single_crossing(p)
    kys = np.asarray(ky_samples, dtype=float)
    r = np.array([r_of_k((0.0, ky), crossing) for ky in kys])
    return CriticalProfile(m_f=p.m_f, ky_samples=kys, r_profile=r)


def theta0(profile: CriticalProfile) -> float:
    """Transport angle Theta_0 = integral of (N^2/2) d_alpha over the loop.

    N = (sqrt(1+r) - sqrt(1-r))/sqrt(2), so N^2 -> 1 for a pure profile and
    the integral reduces to half the winding of alpha. Composite trapezoid at
    the profile's native sampling; the LZ dip in r has width ~ sqrt(v_LZ), so
    the sampling should put at least ~20 points inside |ky| <= sqrt(v_LZ).
    """
    r = profile.r_profile
    n_amp = (np.sqrt(1.0 + r) - np.sqrt(1.0 - r)) / np.sqrt(2.0)
    integrand = 0.5 * n_amp**2 * d_planar_angle(profile.ky_samples, profile.m_f)
    return float(np.trapezoid(integrand, profile.ky_samples))


def critical_holonomy(theta: float, p_plus0: float):
    """Holonomy matrix on the critical loop and its eigenvalues.

    In the band basis, transport by angle Theta starting from populations
    (p_plus0, 1 - p_plus0) gives

        M = [[p+ cos Theta, i p+ sin Theta],
             [i p- sin Theta, p- cos Theta]]

    with eigenvalues z+- = (cos Theta +- sqrt(r0^2 - sin^2 Theta))/2,
    r0 = p+ - p-. The square root is the principal complex root and the pair
    is returned with |z_plus| >= |z_minus| (ties keep the +root first, which
    has non-negative imaginary part).
    """
    if not 0.0 <= p_plus0 <= 1.0:
        raise ValueError(f"p_plus0 = {p_plus0} outside [0, 1]")
    p_plus = float(p_plus0)
    p_minus = 1.0 - p_plus
    r0 = p_plus - p_minus
    c, s = np.cos(theta), np.sin(theta)
    M = np.array(
        [[p_plus * c, 1j * p_plus * s], [1j * p_minus * s, p_minus * c]],
        dtype=complex,
    )
    root = np.sqrt(complex(r0 * r0 - s * s))
    z_plus = 0.5 * (c + root)
    z_minus = 0.5 * (c - root)
    if abs(z_minus) > abs(z_plus):
        z_plus, z_minus = z_minus, z_plus
    return M, z_plus, z_minus


def delta_phi(v_lz: float, m_f: float, cutoff_lambda: float = 1.0) -> float:
    """Leading-order shift of the transport angle at finite ramp speed.

    Excitations within |ky| <= Lambda sqrt(v_LZ) of the crossing deplete the
    pure-state integrand, giving delta = -(Lambda^2 sqrt(pi)/(m_f+2)) sqrt(v_LZ).
    Only the sqrt(v_LZ) scaling is a sharp claim; the prefactor depends on the
    cutoff choice.
    """
    if v_lz < 0.0:
        raise ValueError("v_lz must be >= 0")
    if cutoff_lambda < 1.0:
        raise ValueError("cutoff_lambda must be >= 1")
    if abs(m_f + 2.0) <= _PLANAR_TOL:
        raise ValueError("m_f = -2 is a phase boundary; the expansion point is gapless")
    return -(cutoff_lambda**2) * np.sqrt(np.pi) / (m_f + 2.0) * np.sqrt(v_lz)


def quantized_uhlmann_phase(phi_b: float, correction: float) -> float:
    """arg cos(phi_b + correction): exactly pi or 0 away from the sign change."""
    c = np.cos(phi_b + correction)
    if abs(c) < _PHASE_TOL:
        raise UndefinedPhase(f"cos({phi_b} + {correction}) vanishes; phase at a transition")
    return float(np.pi) if c < 0.0 else 0.0
