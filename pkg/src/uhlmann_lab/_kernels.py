"""Numba hot loop for the dephasing master equation on a momentum grid.

The per-momentum state is kept as a real Bloch vector s with
rho = (1 + s.sigma)/2, which makes Hermiticity and unit trace exact by
representation. The master equation

    drho/dt = -i[H, rho] + gamma (sz~ rho sz~ - rho),   sz~ = n.sigma

becomes  ds/dt = 2 d x s + 2 gamma ((n.s) n - s)  with n = d/|d|.

Grid points are independent, so the kernel is a parallel map with a
sequential fixed-step RK4 per point and no cross-point communication; results
are bitwise independent of the thread count.
"""
import numpy as np
from numba import njit, prange

# |d|^2 below which the instantaneous eigenbasis is undefined; the dephasing
# term then reuses the previous substep's axis (bounded, measure-zero window)
_DEG2 = 1e-24


@njit(cache=True, inline="always")
def _rhs(m, sx, sy, sz, dx, dy, cc, g, nx, ny, nz, have_n):
    dz = m + cc
    fx = 2.0 * (dy * sz - dz * sy)
    fy = 2.0 * (dz * sx - dx * sz)
    fz = 2.0 * (dx * sy - dy * sx)
    e2 = dx * dx + dy * dy + dz * dz
    if e2 > _DEG2:
        e = np.sqrt(e2)
        nx = dx / e
        ny = dy / e
        nz = dz / e
        have_n = True
    if have_n and g != 0.0:
        ns = nx * sx + ny * sy + nz * sz
        fx += 2.0 * g * (ns * nx - sx)
        fy += 2.0 * g * (ns * ny - sy)
        fz += 2.0 * g * (ns * nz - sz)
    return fx, fy, fz, nx, ny, nz, have_n


@njit(parallel=True, cache=True)
def rk4_segment(s, dx, dy, cc, gamma, ms, h, nsteps):
    """Advance every grid point through nsteps RK4 steps of width h, in place.

    s:      (npts, 3) Bloch vectors, updated in place
    dx, dy: (npts,) sin kx, sin ky
    cc:     (npts,) cos kx + cos ky
    gamma:  (npts,) dephasing rates
    ms:     (2*nsteps + 1,) ramp mass at every half-step time
    """
    for i in prange(s.shape[0]):
        sx = s[i, 0]
        sy = s[i, 1]
        sz = s[i, 2]
        dxi = dx[i]
        dyi = dy[i]
        cci = cc[i]
        g = gamma[i]
        nx = 0.0
        ny = 0.0
        nz = 0.0
        have_n = False
        for step in range(nsteps):
            m0 = ms[2 * step]
            m1 = ms[2 * step + 1]
            m2 = ms[2 * step + 2]
            ax, ay, az, nx, ny, nz, have_n = _rhs(
                m0, sx, sy, sz, dxi, dyi, cci, g, nx, ny, nz, have_n)
            bx, by, bz, nx, ny, nz, have_n = _rhs(
                m1, sx + 0.5 * h * ax, sy + 0.5 * h * ay, sz + 0.5 * h * az,
                dxi, dyi, cci, g, nx, ny, nz, have_n)
            cx, cy, cz, nx, ny, nz, have_n = _rhs(
                m1, sx + 0.5 * h * bx, sy + 0.5 * h * by, sz + 0.5 * h * bz,
                dxi, dyi, cci, g, nx, ny, nz, have_n)
            ex, ey, ez, nx, ny, nz, have_n = _rhs(
                m2, sx + h * cx, sy + h * cy, sz + h * cz,
                dxi, dyi, cci, g, nx, ny, nz, have_n)
            sx += h * (ax + 2.0 * bx + 2.0 * cx + ex) / 6.0
            sy += h * (ay + 2.0 * by + 2.0 * cy + ey) / 6.0
            sz += h * (az + 2.0 * bz + 2.0 * cz + ez) / 6.0
        s[i, 0] = sx
        s[i, 1] = sy
        s[i, 2] = sz
