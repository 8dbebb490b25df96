"""Jitted pieces of the conditional-degree integral.

For two secondary users ``t`` apart at (+-t/2, 0) the kernel evaluates

    J(t) = iint_{U(t)} S_I2(x) / (pi R_p^2) dA

over the union ``U(t)`` of the two radius-``R_I`` disks. The union is folded
onto the left disk: J = iint_{D1} f * (2 - 1[x in D2]) dA, integrated in
polar coordinates about the left center. The radial integral is split at
every radius where the integrand loses smoothness and done with fixed
Gauss-Legendre; the angular one is adaptive GK15.
"""

import math

import numpy as np
from numba import njit

from percolab.geometry import _lens, _s_i2
from percolab.quadrature import gk15_adaptive

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
MAX_BREAKS = 24


@njit(nogil=True)
def _ray_hits(qx, qy, rho, ox, ex, ey, rmax, out, m):
    # Distances r in (0, rmax) along o + r*e at which |x - q| == rho.
    vx = qx - ox
    vy = qy
    b = ex * vx + ey * vy
    disc = b * b - (vx * vx + vy * vy - rho * rho)
    if disc > 0.0:
        s = math.sqrt(disc)
        r = b - s
        if 0.0 < r < rmax:
            out[m] = r
            m += 1
        r = b + s
        if 0.0 < r < rmax:
            out[m] = r
            m += 1
    return m


@njit(nogil=True)
def _radial(phi, args):
    R_p = args[0]
    R_I = args[1]
    r_I = args[2]
    t = args[3]
    ox = -0.5 * t
    ex = math.cos(phi)
    ey = math.sin(phi)
    cuts = np.empty(MAX_BREAKS)
    m = 0
    cuts[m] = 0.0
    m += 1
    cuts[m] = R_I
    m += 1
    inner = abs(r_I - R_p)
    outer = r_I + R_p
    if 0.0 < inner < R_I:
        cuts[m] = inner
        m += 1
    if outer < R_I:
        cuts[m] = outer
        m += 1
    if t > 0.0:
        m = _ray_hits(0.5 * t, 0.0, inner, ox, ex, ey, R_I, cuts, m)
        m = _ray_hits(0.5 * t, 0.0, outer, ox, ex, ey, R_I, cuts, m)
        m = _ray_hits(0.5 * t, 0.0, R_I, ox, ex, ey, R_I, cuts, m)
        if t < 2.0 * r_I:
            h = math.sqrt(r_I * r_I - 0.25 * t * t)
            m = _ray_hits(0.0, h, R_p, ox, ex, ey, R_I, cuts, m)
            m = _ray_hits(0.0, -h, R_p, ox, ex, ey, R_I, cuts, m)
    cuts_sorted = np.sort(cuts[:m])
    total = 0.0
    n = GL_NODES.shape[0]
    for k in range(m - 1):
        a = cuts_sorted[k]
        b = cuts_sorted[k + 1]
        if b - a <= 1e-14 * R_I:
            continue
        mid = 0.5 * (a + b)
        mx = ox + mid * ex - 0.5 * t
        my = mid * ey
        w = 1.0 if (t == 0.0 or mx * mx + my * my <= R_I * R_I) else 2.0
        half = 0.5 * (b - a)
        acc = 0.0
        for i in range(n):
            r = mid + half * GL_NODES[i]
            acc += GL_WEIGHTS[i] * r * _s_i2(ox + r * ex, r * ey, R_p, t, r_I)
        total += w * half * acc
    return total / (math.pi * R_p * R_p)


@njit(nogil=True)
def union_overlap_integral(t, R_p, R_I, r_I, epsrel):
    """J(t) and a convergence flag."""
    args = np.array([R_p, R_I, r_I, t])
    scale = R_I * R_I
    val, err, ok = gk15_adaptive(_radial, 0.0, math.pi, args, 1e-12 * scale, epsrel,
                                 2000, 4)
    return 2.0 * val, 2.0 * err, ok


@njit(nogil=True)
def degree_exponent(ts, R_p, R_I, r_I, overlap_I, epsrel):
    """Bidirectional-opportunity exponent E(t) for each t in ``ts``.

    The conditional probability of a bidirectional opportunity at distance t
    is exp(-lambda_PT * E(t)). Returns ``(E, all_converged)``.
    """
    out = np.empty(ts.shape[0])
    base = math.pi * (r_I * r_I + R_I * R_I + overlap_I)
    ok_all = True
    for k in range(ts.shape[0]):
        t = ts[k]
        j, _, ok = union_overlap_integral(t, R_p, R_I, r_I, epsrel)
        ok_all = ok_all and ok
        out[k] = base - _lens(t, r_I, r_I) - _lens(t, R_I, R_I) - j
    return out, ok_all
