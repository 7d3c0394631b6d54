"""Exception taxonomy.

Every error that a caller is expected to branch on gets its own class; all of
them derive from UhlmannLabError so batch drivers can catch the whole family.
Instances carry the offending coordinates as attributes where that helps a
report point at the failure.
"""


class UhlmannLabError(Exception):
    """Base class for all domain errors raised by this package."""


class DegeneratePoint(UhlmannLabError):
    """Gap closes at this (k, m): eigenbasis undefined."""

    def __init__(self, k, m, norm=0.0):
        self.k = tuple(k)
        self.m = m
        self.norm = norm
        super().__init__(f"|d| = {norm:.3e} < 1e-12 at k = {self.k}, m = {m}")


class CriticalParameter(UhlmannLabError):
    """m sits on a phase boundary; the Chern number is undefined there."""

    def __init__(self, m):
        self.m = m
        super().__init__(f"gapless Hamiltonian at m = {m}")


class UnsupportedMultiCrossing(UhlmannLabError):
    """Closed-form helpers only cover ramps that cross one phase boundary."""


class IntegratorDiverged(UhlmannLabError):
    """A state left the physical region; dt is too large for this gamma."""

    def __init__(self, t, k, detail):
        self.t = t
        self.k = tuple(k)
        super().__init__(f"at t = {t:.6g}, k = {self.k}: {detail}")


class MixedStateInput(UhlmannLabError):
    """A pure-state-only operation received a mixed state."""


class VanishingOverlap(UhlmannLabError):
    """Consecutive loop states nearly orthogonal; the loop grid is too coarse."""


class AmbiguousWinding(UhlmannLabError):
    """Winding residual too large to round; sample sits on a discontinuity."""

    def __init__(self, residual, where=None):
        self.residual = residual
        self.where = where
        at = "" if where is None else f" at {where}"
        super().__init__(f"winding residual {residual:.4f} > 0.1{at}")


class ZeroTrace(UhlmannLabError):
    """Tr M vanished: the Uhlmann phase is undefined at a transition point.

    The holonomy spectrum is still well defined and is attached to the
    exception so callers can keep the amplitude/phase data.
    """

    def __init__(self, kx, z_plus, z_minus):
        self.kx = kx
        self.z_plus = z_plus
        self.z_minus = z_minus
        super().__init__(f"|Tr M| < 1e-12 at kx = {kx}")


class GaplessSpectrum(UhlmannLabError):
    """Amplitude gap closed somewhere on the flow; the index is undefined."""

    def __init__(self, gap, kx=None):
        self.gap = gap
        self.kx = kx
        at = "" if kx is None else f" (minimum near kx = {kx:.4f})"
        super().__init__(f"amplitude gap {gap:.3e} <= 1e-4{at}")


class UndefinedAngle(UhlmannLabError):
    """Planar angle undefined: both arctangent arguments vanish."""


class SingularDenominator(UhlmannLabError):
    """Closed-form denominator below threshold."""


class UndefinedPhase(UhlmannLabError):
    """cos(Phi_B + correction) sits at the transition zero."""


class ConfigError(UhlmannLabError):
    """Invalid experiment configuration (CLI exit code 1)."""
