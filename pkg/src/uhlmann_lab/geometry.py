"""Pure-state Berry/Chern and mixed-state Uhlmann holonomy invariants.

All loops run along ky at fixed kx, base point ky = -pi, samples covering
[-pi, pi) exactly once with the closure segment back to the base point
included. The path-ordered exponential is the ordered product of exact 2x2
exponentials of the per-segment connection A dky, leftmost factor = last
segment; the holonomy matrix is M = rho(base) * Pexp with trivial initial
gauge. Reported quantities (phi_u = arg Tr M, eigenvalue moduli and phases)
are invariant under re-gauging and covariant under base-point rolls.

Winding numbers are extracted from phase profiles over the closed kx cycle by
accumulating wrapped differences; the residual from an exact integer is
reported and a residual > 0.1 raises instead of rounding silently.

Eigenbasis denominators p_i + p_j in the connection are clamped below at
1e-12: for trace-one states the cross terms sit at p_i + p_j = 1, but
near-pure states make the eigendecomposition itself ill-conditioned and the
clamp bounds it without touching results at the working tolerances.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AmbiguousWinding,
    GaplessSpectrum,
    MixedStateInput,
    VanishingOverlap,
    ZeroTrace,
)
from .model import I2, SX, SY, SZ, bloch_from_density, lower_band_vectors

EIG_CLAMP = 1e-12
ZERO_TRACE_TOL = 1e-12
GAP_TOL = 1e-4
WINDING_RESIDUAL_TOL = 0.1
PURITY_TOL = 1e-8
OVERLAP_TOL = 1e-8


def principal_angle(phi):
    """Map angles into (-pi, pi]; -pi folds to +pi."""
    out = np.mod(np.asarray(phi) + np.pi, 2.0 * np.pi) - np.pi
    out = np.where(out == -np.pi, np.pi, out)
    return float(out) if out.ndim == 0 else out


def phase_winding(phis: np.ndarray, where=None) -> tuple[int, float]:
    """Winding of a phase profile over a closed cycle.

    Adjacent differences are wrapped into (-pi, pi], the wrap from the last
    sample back to the first is included, and the sum over 2 pi is rounded.
    Returns (integer, residual); raises AmbiguousWinding on residual > 0.1.
    """
    phis = np.asarray(phis, dtype=float)
    d = np.diff(phis, append=phis[:1])
    d = np.mod(d + np.pi, 2.0 * np.pi) - np.pi
    d = np.where(d == -np.pi, np.pi, d)
    total = d.sum() / (2.0 * np.pi)
    n = int(np.rint(total))
    residual = float(abs(total - n))
    if residual > WINDING_RESIDUAL_TOL:
        raise AmbiguousWinding(residual, where)
    return n, residual


@dataclass(frozen=True)
class LoopField:
    """States along one fixed-kx loop; ky_samples cover [-pi, pi) once."""

    kx: float
    ky_samples: np.ndarray
    states: np.ndarray  # (N, 2, 2) complex, one density matrix per sample

    def __post_init__(self):
        ky = np.asarray(self.ky_samples, dtype=float)
        if ky.ndim != 1 or len(ky) < 16:
            raise ValueError("need >= 16 ky samples")
        if np.any(np.diff(ky) <= 0.0):
            raise ValueError("ky_samples must be strictly increasing")
        st = np.asarray(self.states, dtype=complex)
        if st.shape != (len(ky), 2, 2):
            raise ValueError(f"states shape {st.shape} != ({len(ky)}, 2, 2)")
        object.__setattr__(self, "ky_samples", ky)
        object.__setattr__(self, "states", st)


@dataclass(frozen=True)
class HolonomyResult:
    """Holonomy matrix M and its polar-decomposed spectrum.

    z+/z- are ordered by modulus; at equal moduli (conjugate pair) z+ is the
    one with non-negative phase. mu_minus of an exactly vanishing eigenvalue
    has no intrinsic value and is set to -mu_plus.
    """

    M: np.ndarray
    phi_u: float
    z_plus: complex
    z_minus: complex
    lambda_plus: float
    lambda_minus: float
    mu_plus: float
    mu_minus: float


@dataclass(frozen=True)
class SpectralFlow:
    """Per-kx holonomy spectra over the closed kx cycle.

    phi_u is NaN (and phi_defined False) on rows where Tr M vanished; the
    spectrum columns are always filled.
    """

    kx_samples: np.ndarray
    phi_u: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    phi_defined: np.ndarray
    amplitude_gap: float
    Ms: np.ndarray = field(repr=False, default=None)


# ---------------------------------------------------------------------------
# pure-state route

def pure_state_vectors(states: np.ndarray) -> np.ndarray:
    """State vectors of a (..., 2, 2) field of pure projectors.

    Raises MixedStateInput when any purity Tr rho^2 < 1 - 1e-8. The vector is
    the +1 eigenvector of s.sigma, built through the same branch-and-gauge
    rule as the band eigenvectors.
    """
    states = np.asarray(states, dtype=complex)
    purity = np.sum(np.abs(states) ** 2, axis=(-2, -1)).real
    if np.any(purity < 1.0 - PURITY_TOL):
        worst = float(purity.min())
        raise MixedStateInput(f"min purity {worst:.10f} < {1 - PURITY_TOL}")
    s = bloch_from_density(states)
    return lower_band_vectors(-s)


def berry_phase_profile(vecs: np.ndarray, kx_samples=None) -> np.ndarray:
    """Wilson-loop phases -arg prod <psi_j|psi_j+1> for stacked loops.

    vecs: (..., N, 2) normalized state vectors along each loop, cyclic
    closure implied. Returns phases in (-pi, pi] with shape (...,).
    """
    nxt = np.roll(vecs, -1, axis=-2)
    overlaps = np.sum(np.conj(vecs) * nxt, axis=-1)
    mods = np.abs(overlaps)
    if np.any(mods < OVERLAP_TOL):
        idx = np.unravel_index(np.argmin(mods), mods.shape)
        at = "" if kx_samples is None else f" at kx = {np.asarray(kx_samples)[idx[0]]:.4f}"
        raise VanishingOverlap(f"|overlap| = {mods[idx]:.2e} at segment {idx[-1]}{at}")
    phases = np.angle(overlaps)
    # arg of the product, kept away from modulus underflow
    return principal_angle(-np.sum(phases, axis=-1))


def berry_phase_loop(loop: LoopField) -> float:
    """Berry phase of one pure-state loop, in (-pi, pi]."""
    vecs = pure_state_vectors(loop.states)
    return float(berry_phase_profile(vecs[None])[0])


def chern_number(kx_samples, phases) -> tuple[int, float]:
    """Winding of a Berry-phase profile over the closed kx cycle.

    Accepts profiles with or without the duplicated kx = +pi endpoint (the
    duplicate contributes a null difference). Returns (chern, residual).
    """
    kx_samples = np.asarray(kx_samples, dtype=float)
    phases = np.asarray(phases, dtype=float)
    if len(kx_samples) < 21:
        raise ValueError(f"{len(kx_samples)} kx samples < 21")
    if kx_samples.shape != phases.shape:
        raise ValueError("kx_samples and phases differ in length")
    return phase_winding(phases, where="berry profile")


# ---------------------------------------------------------------------------
# mixed-state route

def sqrt_psd_2x2(rho: np.ndarray) -> np.ndarray:
    """Closed-form PSD square root (rho + sqrt(det) 1)/sqrt(tr + 2 sqrt(det)).

    det is clamped at zero so mildly negative eigenvalues (>= -1e-10 per the
    density-matrix contract) degrade gracefully; the zero matrix maps to the
    zero matrix.
    """
    return _sqrt_psd(np.asarray(rho, dtype=complex))


def _sqrt_psd(rho: np.ndarray) -> np.ndarray:
    det = np.clip((rho[..., 0, 0] * rho[..., 1, 1] - rho[..., 0, 1] * rho[..., 1, 0]).real, 0.0, None)
    tr = (rho[..., 0, 0] + rho[..., 1, 1]).real
    s = np.sqrt(det)
    den = np.sqrt(np.clip(tr + 2.0 * s, 0.0, None))
    safe = np.where(den > 1e-150, den, 1.0)
    out = (rho + s[..., None, None] * I2) / safe[..., None, None]
    return np.where((den > 1e-150)[..., None, None], out, np.zeros_like(rho))


def _eigh2(rho: np.ndarray):
    """Closed-form eigendecomposition of Hermitian 2x2 stacks.

    Returns (p, U): p[..., 0] <= p[..., 1], U columns are the eigenvectors.
    Two algebraic constructions cover the poles; the larger-norm one wins.
    """
    a = 0.5 * (rho[..., 0, 0] + rho[..., 1, 1]).real
    b = 0.5 * (rho[..., 0, 0] - rho[..., 1, 1]).real
    c = rho[..., 0, 1]
    h = np.sqrt(b * b + np.abs(c) ** 2)
    p = np.stack([a - h, a + h], axis=-1)

    v1 = np.stack([-c, (b + h).astype(complex)], axis=-1)
    v2 = np.stack([(b - h).astype(complex), np.conj(c)], axis=-1)
    n1 = np.linalg.norm(v1, axis=-1)
    n2 = np.linalg.norm(v2, axis=-1)
    lo = np.where((n1 >= n2)[..., None], v1, v2)
    norm = np.linalg.norm(lo, axis=-1, keepdims=True)
    lo = lo / np.where(norm > 0.0, norm, 1.0)
    hi = np.stack([-np.conj(lo[..., 1]), np.conj(lo[..., 0])], axis=-1)
    U = np.stack([lo, hi], axis=-1)  # columns
    return p, U


def _expm_antiherm(A: np.ndarray) -> np.ndarray:
    """Exact exponential of anti-Hermitian 2x2 stacks via A = i(c 1 + a.sigma)."""
    c = 0.5 * (A[..., 0, 0] + A[..., 1, 1]).imag
    ax = 0.5 * (A[..., 0, 1] + A[..., 1, 0]).imag
    ay = 0.5 * (A[..., 0, 1] - A[..., 1, 0]).real
    az = 0.5 * (A[..., 0, 0] - A[..., 1, 1]).imag
    a = np.sqrt(ax * ax + ay * ay + az * az)
    sinc = np.sinc(a / np.pi)  # sin(a)/a with the correct a = 0 limit
    out = np.cos(a)[..., None, None] * np.broadcast_to(I2, A.shape).copy()
    out += 1j * sinc[..., None, None] * (
        ax[..., None, None] * SX + ay[..., None, None] * SY + az[..., None, None] * SZ
    )
    return np.exp(1j * c)[..., None, None] * out


def _connection_steps(states: np.ndarray) -> np.ndarray:
    """A dky for every segment of stacked loops (cyclic), shape like states.

    Assembled in the eigenbasis of the segment midpoint rho_mid, elements
    <i|[d sqrt(rho), sqrt(rho)]|j> / (p_i + p_j); the 1/dky in the derivative
    cancels against the dky step weight so neither appears.
    """
    nxt = np.roll(states, -1, axis=-3)
    mid = 0.5 * (states + nxt)
    dsq = _sqrt_psd(nxt) - _sqrt_psd(states)
    sq_mid = _sqrt_psd(mid)
    C = dsq @ sq_mid - sq_mid @ dsq
    p, U = _eigh2(mid)
    pc = np.clip(p, EIG_CLAMP, None)
    den = pc[..., :, None] + pc[..., None, :]
    Uh = np.conj(np.swapaxes(U, -1, -2))
    Ab = (Uh @ C @ U) / den
    return U @ Ab @ Uh


def uhlmann_connection_step(rho_a: np.ndarray, rho_b: np.ndarray, d_ky: float) -> np.ndarray:
    """Connection step A dky between two consecutive loop samples.

    d_ky is accepted for interface symmetry; it cancels between the finite
    difference and the step weight and never enters numerically.
    """
    if d_ky <= 0.0:
        raise ValueError("d_ky must be > 0")
    pair = np.stack([np.asarray(rho_a, dtype=complex), np.asarray(rho_b, dtype=complex)])
    # cyclic roll on a 2-stack puts (a -> b) in slot 0; slot 1 is the b -> a
    # return segment, discarded
    return _connection_steps(pair)[0]


def _holonomy_matrices(states: np.ndarray) -> np.ndarray:
    """M = rho(base) Pexp for stacked loops, states shape (B, N, 2, 2)."""
    steps = _expm_antiherm(_connection_steps(states))
    P = np.broadcast_to(I2, (states.shape[0], 2, 2)).copy()
    for j in range(states.shape[1]):
        P = steps[:, j] @ P
    return states[:, 0] @ P


def _eig2_general(M: np.ndarray):
    """Eigenvalues of general 2x2 stacks, ordered: |z+| >= |z-|, ties by phase."""
    tr = M[..., 0, 0] + M[..., 1, 1]
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    disc = np.sqrt(tr * tr - 4.0 * det)
    za = 0.5 * (tr + disc)
    zb = 0.5 * (tr - disc)
    swap = np.abs(za) < np.abs(zb)
    # equal moduli: put the non-negative-phase member first
    tie = np.isclose(np.abs(za), np.abs(zb), rtol=1e-14, atol=0.0)
    swap = np.where(tie, za.imag < zb.imag, swap)
    z_plus = np.where(swap, zb, za)
    z_minus = np.where(swap, za, zb)
    return z_plus, z_minus


def _spectrum_fields(M: np.ndarray):
    z_plus, z_minus = _eig2_general(M)
    lam_p = np.abs(z_plus)
    lam_m = np.abs(z_minus)
    mu_p = principal_angle(np.angle(z_plus))
    mu_m = principal_angle(np.angle(z_minus))
    # a vanishing z- has no phase of its own; pin it to the opposition value
    mu_m = np.where(lam_m < 1e-15, principal_angle(-np.asarray(mu_p)), mu_m)
    return z_plus, z_minus, lam_p, lam_m, mu_p, mu_m


def uhlmann_holonomy(loop: LoopField) -> HolonomyResult:
    """Holonomy of one loop: M, phi_u = arg Tr M, and the z spectrum.

    Raises ZeroTrace when |Tr M| < 1e-12 (phase-transition point); the
    exception carries z_plus/z_minus so the spectrum survives.
    """
    M = _holonomy_matrices(loop.states[None])[0]
    z_p, z_m, lam_p, lam_m, mu_p, mu_m = _spectrum_fields(M)
    tr = M[0, 0] + M[1, 1]
    if abs(tr) < ZERO_TRACE_TOL:
        raise ZeroTrace(loop.kx, complex(z_p), complex(z_m))
    return HolonomyResult(
        M=M,
        phi_u=float(principal_angle(np.angle(tr))),
        z_plus=complex(z_p),
        z_minus=complex(z_m),
        lambda_plus=float(lam_p),
        lambda_minus=float(lam_m),
        mu_plus=float(mu_p),
        mu_minus=float(mu_m),
    )


def spectral_flow(loops) -> SpectralFlow:
    """Stack per-kx holonomies into a flow; ZeroTrace rows get NaN phi_u."""
    kxs = np.array([lp.kx for lp in loops], dtype=float)
    states = np.stack([lp.states for lp in loops])
    M = _holonomy_matrices(states)
    z_p, z_m, lam_p, lam_m, mu_p, mu_m = _spectrum_fields(M)
    tr = M[..., 0, 0] + M[..., 1, 1]
    defined = np.abs(tr) >= ZERO_TRACE_TOL
    phi = np.where(defined, principal_angle(np.angle(tr)), np.nan)
    gap = float(np.min(lam_p - lam_m))
    return SpectralFlow(
        kx_samples=kxs,
        phi_u=phi,
        lambda_plus=lam_p,
        lambda_minus=lam_m,
        mu_plus=np.asarray(mu_p),
        mu_minus=np.asarray(mu_m),
        phi_defined=defined,
        amplitude_gap=gap,
        Ms=M,
    )


def field_loops(state_field) -> list[LoopField]:
    """Fixed-kx loops from a StateField; drops the duplicated ky = +pi row."""
    kys = state_field.grid.kys
    n = len(kys) - 1 if np.isclose(kys[-1] - kys[0], 2.0 * np.pi) else len(kys)
    return [
        LoopField(kx=float(kx), ky_samples=kys[:n], states=state_field.states[i, :n])
        for i, kx in enumerate(state_field.grid.kxs)
    ]


def uhlmann_number(flow: SpectralFlow) -> tuple[int, float]:
    """Winding of phi_u over the kx cycle; (integer, residual)."""
    if not np.all(flow.phi_defined):
        kx_bad = float(flow.kx_samples[np.argmin(flow.phi_defined)])
        raise AmbiguousWinding(float("nan"), where=f"phi_u undefined at kx = {kx_bad:.4f}")
    return phase_winding(flow.phi_u, where="uhlmann phase profile")


def spectrum_index(flow: SpectralFlow) -> tuple[int, float]:
    """Winding of mu_plus over the kx cycle, defined only in the gapped regime."""
    if flow.amplitude_gap <= GAP_TOL:
        i = int(np.argmin(flow.lambda_plus - flow.lambda_minus))
        raise GaplessSpectrum(flow.amplitude_gap, kx=float(flow.kx_samples[i]))
    return phase_winding(flow.mu_plus, where="mu_plus profile")
