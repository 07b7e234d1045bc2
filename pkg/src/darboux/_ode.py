"""RK4 sweeps for -psi'' + V psi = E psi.

Both kernels take the potential sampled at half-step spacing: ``v_half[2j]`` is
V at step node ``j`` and ``v_half[2j + 1]`` is V at the midpoint between nodes
``j`` and ``j + 1``. Sweeps run from node 0 to the last node with step ``s``
(negative ``s`` means the caller has reversed the arrays).
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

OVERFLOW = 1e300


def midpoints(v: np.ndarray) -> np.ndarray:
    """Four-point Lagrange interpolation of ``v`` at cell midpoints (O(h^4))."""
    v = np.asarray(v, dtype=np.complex128)
    n = len(v)
    if n < 4:
        return 0.5 * (v[1:] + v[:-1])
    m = np.empty(n - 1, dtype=np.complex128)
    m[1:-1] = (-v[:-3] + 9.0 * v[1:-2] + 9.0 * v[2:-1] - v[3:]) / 16.0
    m[0] = (5.0 * v[0] + 15.0 * v[1] - 5.0 * v[2] + v[3]) / 16.0
    m[-1] = (5.0 * v[-1] + 15.0 * v[-2] - 5.0 * v[-3] + v[-4]) / 16.0
    return m


def half_step_samples(v: np.ndarray, substeps: int = 1) -> np.ndarray:
    """Samples of ``v`` at spacing ``h / (2 * substeps)`` for an RK4 sweep."""
    v = np.asarray(v, dtype=np.complex128)
    n = len(v)
    if substeps == 1:
        out = np.empty(2 * n - 1, dtype=np.complex128)
        out[0::2] = v
        out[1::2] = midpoints(v)
        return out
    t = np.arange(n, dtype=float)
    spline = CubicSpline(t, v)
    return spline(np.linspace(0.0, n - 1.0, 2 * substeps * (n - 1) + 1))


def sweep(v_half, E, s, psi0, dpsi0):
    """Complex RK4 sweep; returns (psi, dpsi) at every step node.

    Raises ``OverflowError`` carrying the node index if |psi| exceeds 1e300.
    """
    E = complex(E)
    n = (len(v_half) + 1) // 2
    q = [complex(z) - E for z in v_half]
    psi = [0j] * n
    dpsi = [0j] * n
    y = complex(psi0)
    d = complex(dpsi0)
    psi[0] = y
    dpsi[0] = d
    hs = 0.5 * s
    s6 = s / 6.0
    for j in range(n - 1):
        a = q[2 * j]
        b = q[2 * j + 1]
        c = q[2 * j + 2]
        k1y = d
        k1d = a * y
        k2y = d + hs * k1d
        k2d = b * (y + hs * k1y)
        k3y = d + hs * k2d
        k3d = b * (y + hs * k2y)
        k4y = d + s * k3d
        k4d = c * (y + s * k3y)
        y = y + s6 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        d = d + s6 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        if abs(y) > OVERFLOW:
            raise OverflowError(j + 1)
        psi[j + 1] = y
        dpsi[j + 1] = d
    return np.array(psi, dtype=np.complex128), np.array(dpsi, dtype=np.complex128)


def sweep_coupled(v_half, E, s, psi0, dpsi0):
    """Same sweep written as the coupled real system for (Re psi, Im psi).

    Re psi'' = (ReV - ReE) Re psi - (ImV - ImE) Im psi
    Im psi'' = (ReV - ReE) Im psi + (ImV - ImE) Re psi
    """
    E = complex(E)
    n = (len(v_half) + 1) // 2
    qr = [float(z.real) - E.real for z in np.asarray(v_half, dtype=np.complex128)]
    qi = [float(z.imag) - E.imag for z in np.asarray(v_half, dtype=np.complex128)]
    out = np.empty((n, 4))
    u, w = complex(psi0).real, complex(psi0).imag
    du, dw = complex(dpsi0).real, complex(dpsi0).imag
    out[0] = (u, w, du, dw)
    hs = 0.5 * s
    s6 = s / 6.0
    for j in range(n - 1):
        ar, ai = qr[2 * j], qi[2 * j]
        br, bi = qr[2 * j + 1], qi[2 * j + 1]
        cr, ci = qr[2 * j + 2], qi[2 * j + 2]
        k1u, k1w = du, dw
        k1du = ar * u - ai * w
        k1dw = ar * w + ai * u
        u2, w2 = u + hs * k1u, w + hs * k1w
        k2u, k2w = du + hs * k1du, dw + hs * k1dw
        k2du = br * u2 - bi * w2
        k2dw = br * w2 + bi * u2
        u3, w3 = u + hs * k2u, w + hs * k2w
        k3u, k3w = du + hs * k2du, dw + hs * k2dw
        k3du = br * u3 - bi * w3
        k3dw = br * w3 + bi * u3
        u4, w4 = u + s * k3u, w + s * k3w
        k4u, k4w = du + s * k3du, dw + s * k3dw
        k4du = cr * u4 - ci * w4
        k4dw = cr * w4 + ci * u4
        u = u + s6 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        w = w + s6 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        du = du + s6 * (k1du + 2.0 * k2du + 2.0 * k3du + k4du)
        dw = dw + s6 * (k1dw + 2.0 * k2dw + 2.0 * k3dw + k4dw)
        if abs(u) + abs(w) > OVERFLOW:
            raise OverflowError(j + 1)
        out[j + 1] = (u, w, du, dw)
    return out[:, 0] + 1j * out[:, 1], out[:, 2] + 1j * out[:, 3]


def sweep_function(potential, x_start, x_stop, n, E, psi0, dpsi0):
    """RK4 sweep with an analytic potential callable, ``n`` nodes from start to stop."""
    xs = np.linspace(x_start, x_stop, 2 * n - 1)
    v_half = np.asarray(potential(xs), dtype=np.complex128)
    s = (x_stop - x_start) / (n - 1)
    return sweep(v_half, E, s, psi0, dpsi0)
