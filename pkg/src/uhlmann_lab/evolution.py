"""Time evolution under the dephasing master equation, plus closed forms.

    drho_k/dt = -i[H_k(m(t)), rho_k] + gamma (sz~ rho_k sz~ - rho_k)

with sz~ = n_k(m(t)).sigma the Pauli operator along the instantaneous
eigenaxis. Dephasing kills coherences between the instantaneous bands and
conserves the band populations; the fully dephased state is
rho = (1 + r sz~)/2 with eigenvalues (1 +- r)/2.

evolve() integrates every grid point independently with fixed-step classical
RK4, re-evaluating H and sz~ at each substep time. States travel through the
kernel as Bloch vectors, so every snapshot is Hermitian with unit trace by
representation (the re-Hermitize/renormalize step is built into the state
encoding and the logged trace drift is identically zero); positivity is
monitored and a violation beyond 1e-6 raises IntegratorDiverged.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ._kernels import rk4_segment
from .errors import DegeneratePoint, IntegratorDiverged
from .model import (
    DEGENERACY_TOL,
    I2,
    SX,
    SY,
    SZ,
    MomentumGrid,
    bloch_field,
    bloch_from_density,
    density_from_bloch,
    eigensystem,
)
from .ramp import RampProtocol, m_of_t

# positivity slack: min eigenvalue (1 - |s|)/2 must stay above -1e-6
_DIVERGENCE_S2 = (1.0 + 2e-6) ** 2


@dataclass(frozen=True)
class DephasingConfig:
    """Dephasing rate, uniform (float) or per grid point (nkx, nky array)."""

    gamma: float | np.ndarray = 0.0

    def max_rate(self) -> float:
        return float(np.max(np.asarray(self.gamma)))


def default_dt(gamma) -> float:
    """1e-3 is enough for the working parameter range; strong dephasing
    (gamma >= 10) tightens the stiffest scale and drops it to 1e-4."""
    return 1e-4 if float(np.max(np.asarray(gamma))) >= 10.0 else 1e-3


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_final: float
    sample_times: tuple[float, ...]

    def __post_init__(self):
        if self.dt <= 0.0 or self.t_final <= 0.0:
            raise ValueError("dt and t_final must be > 0")
        ts = tuple(float(t) for t in self.sample_times)
        if any(t < 0.0 or t > self.t_final for t in ts):
            raise ValueError("sample_times must lie in [0, t_final]")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("sample_times must be strictly increasing")
        object.__setattr__(self, "sample_times", ts)


@dataclass
class StateField:
    """One density matrix per grid point at a common time."""

    grid: MomentumGrid
    t: float
    states: np.ndarray  # (nkx, nky, 2, 2) complex

    def bloch(self) -> np.ndarray:
        return bloch_from_density(self.states)

    def validate(self, trace_tol=1e-8, eig_tol=1e-8):
        """Hermiticity, unit trace, positivity at the StateField tolerances."""
        herm = np.max(np.abs(self.states - np.conj(np.swapaxes(self.states, -1, -2))))
        if herm > 1e-12:
            raise ValueError(f"max Hermiticity defect {herm:.2e}")
        tr = (self.states[..., 0, 0] + self.states[..., 1, 1]).real
        drift = float(np.max(np.abs(tr - 1.0)))
        if drift > trace_tol:
            raise ValueError(f"max trace drift {drift:.2e}")
        s = self.bloch()
        min_eig = float(0.5 * (1.0 - np.max(np.linalg.norm(s, axis=-1))))
        if min_eig < -eig_tol:
            raise ValueError(f"min eigenvalue {min_eig:.2e}")
        return self


@dataclass
class Trajectory:
    protocol: RampProtocol
    config: DephasingConfig
    snapshots: list[StateField] = dc_field(default_factory=list)

    def at(self, t: float) -> StateField:
        for snap in self.snapshots:
            if abs(snap.t - t) < 1e-9:
                return snap
        raise KeyError(f"no snapshot at t = {t}")


def ground_state_field(grid: MomentumGrid, m: float) -> StateField:
    """Lower-band projectors on the whole grid at mass m."""
    d = bloch_field(grid.kxs, grid.kys, m)
    norm = np.linalg.norm(d, axis=-1)
    if np.min(norm) < DEGENERACY_TOL:
        i, j = np.unravel_index(np.argmin(norm), norm.shape)
        raise DegeneratePoint((grid.kxs[i], grid.kys[j]), m, float(norm.min()))
    s = -d / norm[..., None]
    return StateField(grid=grid, t=0.0, states=density_from_bloch(s))


def dephased_field(grid: MomentumGrid, m: float, r: np.ndarray, t: float = 0.0) -> StateField:
    """Closed-form dephased states (1 + r sz~)/2 over the grid."""
    r = np.asarray(r, dtype=float)
    if r.shape != grid.shape:
        raise ValueError(f"r shape {r.shape} != grid {grid.shape}")
    if np.any(np.abs(r) > 1.0 + 1e-12):
        raise ValueError("|r| > 1")
    d = bloch_field(grid.kxs, grid.kys, m)
    norm = np.linalg.norm(d, axis=-1)
    if np.min(norm) < DEGENERACY_TOL:
        i, j = np.unravel_index(np.argmin(norm), norm.shape)
        raise DegeneratePoint((grid.kxs[i], grid.kys[j]), m, float(norm.min()))
    s = np.clip(r, -1.0, 1.0)[..., None] * d / norm[..., None]
    return StateField(grid=grid, t=t, states=density_from_bloch(s))


def dephased_projection(field: StateField, m: float) -> StateField:
    """Diagonal ensemble of every state in the eigenbasis of H(m).

    Keeps band populations and drops all coherences: s -> (n.s) n with n the
    unit Bloch vector. This is the instantaneously dephased counterpart of an
    evolved field, the gamma -> infinity limit at frozen populations.
    """
    d = bloch_field(field.grid.kxs, field.grid.kys, m)
    norm = np.linalg.norm(d, axis=-1)
    if np.min(norm) < DEGENERACY_TOL:
        i, j = np.unravel_index(np.argmin(norm), norm.shape)
        raise DegeneratePoint(
            (field.grid.kxs[i], field.grid.kys[j]), m, float(norm.min())
        )
    n = d / norm[..., None]
    r = np.sum(n * field.bloch(), axis=-1)
    return dephased_field(field.grid, m, np.clip(r, -1.0, 1.0), t=field.t)


def instantaneous_dephasing_operator(k, m: float) -> np.ndarray:
    """sz~ = n.sigma; involutory. Raises DegeneratePoint where the gap closes."""
    es = eigensystem(k, m)
    return es.n[0] * SX + es.n[1] * SY + es.n[2] * SZ


def master_rhs(rho: np.ndarray, H: np.ndarray, sigma_z: np.ndarray, gamma: float) -> np.ndarray:
    """-i[H, rho] + gamma (sz~ rho sz~ - rho); Hermitian and traceless.

    Reference implementation in matrix form; the integrator uses the
    equivalent Bloch-vector kernel and the two are cross-checked in tests.
    """
    comm = H @ rho - rho @ H
    return -1j * comm + gamma * (sigma_z @ rho @ sigma_z - rho)


def dephased_closed_form(k, m: float, r: float) -> np.ndarray:
    """rho = (1 + r sz~)/2 at one momentum; eigenvalues (1 +- r)/2."""
    if not -1.0 <= r <= 1.0:
        raise ValueError(f"r = {r} outside [-1, 1]")
    sz = instantaneous_dephasing_operator(k, m)
    return 0.5 * (I2 + r * sz)


def band_populations(rho: np.ndarray, k, m: float) -> tuple[float, float]:
    """(p_lower, p_upper) in the instantaneous eigenbasis at (k, m)."""
    es = eigensystem(k, m)
    rho = np.asarray(rho, dtype=complex)
    p_lower = float(np.real(np.conj(es.lower) @ rho @ es.lower))
    p_upper = float(np.real(np.conj(es.upper) @ rho @ es.upper))
    return p_lower, p_upper


def _check_positivity(s: np.ndarray, grid: MomentumGrid, t: float):
    s2 = np.sum(s * s, axis=-1)
    worst = int(np.argmax(s2))
    if s2[worst] > _DIVERGENCE_S2:
        nky = len(grid.kys)
        k = (float(grid.kxs[worst // nky]), float(grid.kys[worst % nky]))
        min_eig = 0.5 * (1.0 - np.sqrt(s2[worst]))
        raise IntegratorDiverged(t, k, f"min eigenvalue {min_eig:.3e} < -1e-6, reduce dt")


def evolve(
    rho0: StateField,
    p: RampProtocol,
    cfg: DephasingConfig,
    icfg: IntegratorConfig,
) -> Trajectory:
    """Integrate the master equation from rho0 at t = 0, snapshotting at
    icfg.sample_times. Fixed-step RK4 per grid point with H and sz~
    re-evaluated at every substep time.

    Raises IntegratorDiverged when any state's minimum eigenvalue falls
    below -1e-6 (checked at every sample time).
    """
    if abs(rho0.t) > 1e-12:
        raise ValueError(f"initial field must sit at t = 0, got {rho0.t}")
    gmax = cfg.max_rate()
    if gmax < 0.0:
        raise ValueError("gamma must be >= 0")
    dt_cap = min(0.01, 0.1 / max(1.0, gmax))
    if icfg.dt > dt_cap + 1e-15:
        raise ValueError(f"dt = {icfg.dt} above stability cap {dt_cap:.4g} for gamma = {gmax}")

    nkx, nky = rho0.grid.shape
    npts = nkx * nky
    kxg, kyg = np.meshgrid(rho0.grid.kxs, rho0.grid.kys, indexing="ij")
    dx = np.ascontiguousarray(np.sin(kxg).reshape(npts))
    dy = np.ascontiguousarray(np.sin(kyg).reshape(npts))
    cc = np.ascontiguousarray((np.cos(kxg) + np.cos(kyg)).reshape(npts))
    g = np.asarray(cfg.gamma, dtype=float)
    if g.ndim == 0:
        gamma = np.full(npts, float(g))
    elif g.shape == (nkx, nky):
        gamma = np.ascontiguousarray(g.reshape(npts))
    else:
        raise ValueError(f"gamma shape {g.shape} is neither scalar nor grid {rho0.grid.shape}")

    s = np.ascontiguousarray(bloch_from_density(rho0.states).reshape(npts, 3))

    traj = Trajectory(protocol=p, config=cfg)
    t = 0.0
    samples = list(icfg.sample_times)
    if samples and samples[0] == 0.0:
        traj.snapshots.append(StateField(rho0.grid, 0.0, rho0.states.copy()))
        samples = samples[1:]
    for t_next in samples:
        span = t_next - t
        nsteps = max(1, int(round(span / icfg.dt)))
        h = span / nsteps
        ms = m_of_t(p, t + 0.5 * h * np.arange(2 * nsteps + 1))
        rk4_segment(s, dx, dy, cc, gamma, np.ascontiguousarray(ms), h, nsteps)
        t = t_next
        _check_positivity(s, rho0.grid, t)
        traj.snapshots.append(
            StateField(rho0.grid, t, density_from_bloch(s.reshape(nkx, nky, 3)))
        )
    return traj


# ---------------------------------------------------------------------------
# columnar serialization (schema consumed by the renderer and regression tests)

TRAJECTORY_SCHEMA = "uhlmann-lab/trajectory v1"


def trajectory_to_csv(traj: Trajectory, path):
    """All snapshots as rows t, kx, ky, re/im of the four rho entries."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# schema={TRAJECTORY_SCHEMA}\n")
        f.write("t,kx,ky,re_rho00,im_rho00,re_rho01,im_rho01,re_rho10,im_rho10,re_rho11,im_rho11\n")
        for snap in traj.snapshots:
            kxs, kys = snap.grid.kxs, snap.grid.kys
            for i, kx in enumerate(kxs):
                for j, ky in enumerate(kys):
                    r = snap.states[i, j]
                    vals = [snap.t, kx, ky,
                            r[0, 0].real, r[0, 0].imag, r[0, 1].real, r[0, 1].imag,
                            r[1, 0].real, r[1, 0].imag, r[1, 1].real, r[1, 1].imag]
                    f.write(",".join(f"{v:.12g}" for v in vals) + "\n")
