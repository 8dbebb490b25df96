"""Areas of disk intersections and unions.

Everything is in meters / square meters. The scalar kernels are jitted so the
degree quadrature in :mod:`percolab.bounds` can call them in its inner loop;
the public functions wrap them with argument checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import integrate

from percolab.quadrature import QuadratureError, gk15_adaptive

TWO_PI = 2.0 * math.pi
# Relative closeness to tangency below which the arc construction hands over
# to chord quadrature.
TANGENCY_RTOL = 1e-9


@dataclass(frozen=True)
class Disk:
    x: float
    y: float
    radius: float

    def __post_init__(self):
        _check_radius(self.radius)
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"disk center must be finite, got ({self.x}, {self.y})")

    def contains(self, px, py):
        return (px - self.x) ** 2 + (py - self.y) ** 2 <= self.radius ** 2


@dataclass(frozen=True)
class TwoDiskConfig:
    """Two disks of radii ``r1`` and ``r2`` whose centers are ``t`` apart."""

    t: float
    r1: float
    r2: float

    def __post_init__(self):
        if not self.t >= 0.0:
            raise ValueError(f"separation must be >= 0, got {self.t}")
        _check_radius(self.r1)
        _check_radius(self.r2)

    def lens_area(self):
        return lens_area(self.t, self.r1, self.r2)

    def union_area(self):
        return union2_area(self.t, self.r1, self.r2)


def _check_radius(r):
    if not (r > 0.0 and math.isfinite(r)):
        raise ValueError(f"radius must be positive and finite, got {r}")


# --------------------------------------------------------------------------
# jitted kernels

@njit(cache=True, nogil=True)
def _lens(d, r1, r2):
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        rm = min(r1, r2)
        return math.pi * rm * rm
    c1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)
    c2 = (d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)
    c1 = min(1.0, max(-1.0, c1))
    c2 = min(1.0, max(-1.0, c2))
    k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)
    return r1 * r1 * math.acos(c1) + r2 * r2 * math.acos(c2) - 0.5 * math.sqrt(max(k, 0.0))


@njit(cache=True, nogil=True)
def _chord_overlap(x, args):
    # Length of the vertical chord at abscissa x common to all disks.
    n = args.shape[0] // 3
    top = 1e300
    bottom = -1e300
    for i in range(n):
        cx = args[3 * i]
        cy = args[3 * i + 1]
        r = args[3 * i + 2]
        h2 = r * r - (x - cx) * (x - cx)
        if h2 <= 0.0:
            return 0.0
        h = math.sqrt(h2)
        top = min(top, cy + h)
        bottom = max(bottom, cy - h)
    return max(0.0, top - bottom)


@njit(nogil=True)
def _intersection_by_chords(cx, cy, r):
    n = r.shape[0]
    a = -1e300
    b = 1e300
    args = np.empty(3 * n)
    for i in range(n):
        a = max(a, cx[i] - r[i])
        b = min(b, cx[i] + r[i])
        args[3 * i] = cx[i]
        args[3 * i + 1] = cy[i]
        args[3 * i + 2] = r[i]
    if b <= a:
        return 0.0
    scale = r.max()
    val, _, _ = gk15_adaptive(_chord_overlap, a, b, args, 1e-13 * scale * scale,
                              1e-11, 4000, 8)
    return val


@njit(cache=True, nogil=True)
def _near_tangent(cx, cy, r):
    n = r.shape[0]
    scale = r.max()
    for i in range(n):
        for j in range(i + 1, n):
            d = math.hypot(cx[i] - cx[j], cy[i] - cy[j])
            if abs(d - (r[i] + r[j])) < TANGENCY_RTOL * scale:
                return True
            if d > TANGENCY_RTOL * scale and abs(d - abs(r[i] - r[j])) < TANGENCY_RTOL * scale:
                return True
    return False


@njit(cache=True, nogil=True)
def _intersection_by_arcs(cx, cy, r):
    """Green's theorem over the boundary arcs of the common region."""
    n = r.shape[0]
    ox = cx.mean()
    oy = cy.mean()
    x = cx - ox
    y = cy - oy
    scale = r.max()
    keep = np.ones(n, dtype=np.bool_)
    for i in range(n):
        if not keep[i]:
            continue
        for j in range(i + 1, n):
            if keep[j] and math.hypot(x[i] - x[j], y[i] - y[j]) <= 1e-12 * scale \
                    and abs(r[i] - r[j]) <= 1e-12 * scale:
                keep[j] = False
    for i in range(n):
        for j in range(i + 1, n):
            if keep[i] and keep[j] and math.hypot(x[i] - x[j], y[i] - y[j]) >= r[i] + r[j]:
                return 0.0

    angles = np.empty(2 * n)
    total = 0.0
    for i in range(n):
        if not keep[i]:
            continue
        m = 0
        swallowed = False
        for j in range(n):
            if j == i or not keep[j]:
                continue
            dx = x[j] - x[i]
            dy = y[j] - y[i]
            d = math.hypot(dx, dy)
            if d + r[i] <= r[j]:
                continue
            if d + r[j] <= r[i]:
                swallowed = True
                break
            base = math.atan2(dy, dx)
            c = (d * d + r[i] * r[i] - r[j] * r[j]) / (2.0 * d * r[i])
            half = math.acos(min(1.0, max(-1.0, c)))
            angles[m] = (base - half) % TWO_PI
            angles[m + 1] = (base + half) % TWO_PI
            m += 2
        if swallowed:
            continue
        if m == 0:
            total += math.pi * r[i] * r[i]
            continue
        a_sorted = np.sort(angles[:m])
        for k in range(m):
            a0 = a_sorted[k]
            a1 = a_sorted[k + 1] if k + 1 < m else a_sorted[0] + TWO_PI
            if a1 - a0 <= 0.0:
                continue
            mid = 0.5 * (a0 + a1)
            px = x[i] + r[i] * math.cos(mid)
            py = y[i] + r[i] * math.sin(mid)
            inside = True
            for j in range(n):
                if j == i or not keep[j]:
                    continue
                if (px - x[j]) ** 2 + (py - y[j]) ** 2 > r[j] * r[j]:
                    inside = False
                    break
            if inside:
                total += 0.5 * (r[i] * r[i] * (a1 - a0)
                                + r[i] * (x[i] * (math.sin(a1) - math.sin(a0))
                                          - y[i] * (math.cos(a1) - math.cos(a0))))
    return total


@njit(nogil=True)
def _intersection_area(cx, cy, r):
    if _near_tangent(cx, cy, r):
        return _intersection_by_chords(cx, cy, r)
    return _intersection_by_arcs(cx, cy, r)


@njit(nogil=True)
def _s_i2(px, py, R_p, t, r_I):
    # Probe disk (px, py, R_p) against the union of two r_I disks at (+-t/2, 0).
    d1 = math.hypot(px + 0.5 * t, py)
    d2 = math.hypot(px - 0.5 * t, py)
    a1 = _lens(d1, R_p, r_I)
    a2 = _lens(d2, R_p, r_I)
    if a1 == 0.0 or a2 == 0.0:
        return a1 + a2
    if d1 + R_p <= r_I or d2 + R_p <= r_I:
        return math.pi * R_p * R_p
    if t == 0.0:
        return a1
    if t >= 2.0 * r_I:
        return a1 + a2
    cx = np.array([px, -0.5 * t, 0.5 * t])
    cy = np.array([py, 0.0, 0.0])
    rr = np.array([R_p, r_I, r_I])
    return a1 + a2 - _intersection_area(cx, cy, rr)


# --------------------------------------------------------------------------
# public API

def lens_area(t, r1, r2):
    """Common area of two disks with radii ``r1``, ``r2`` and centers ``t`` apart.

    Broadcasts over numpy arrays.
    """
    t, r1, r2 = np.broadcast_arrays(np.asarray(t, float), np.asarray(r1, float),
                                    np.asarray(r2, float))
    if np.any(~(r1 > 0)) or np.any(~(r2 > 0)):
        raise ValueError("radii must be positive")
    if np.any(~(t >= 0)):
        raise ValueError("separation must be >= 0")
    out = np.empty(t.shape)
    flat_t, flat_1, flat_2, flat_o = t.ravel(), r1.ravel(), r2.ravel(), out.ravel()
    for k in range(flat_t.size):
        flat_o[k] = _lens(flat_t[k], flat_1[k], flat_2[k])
    return float(out) if out.ndim == 0 else out


def union2_area(t, r1, r2):
    """Area of the union of the two disks described by ``(t, r1, r2)``."""
    return np.pi * np.square(r1) + np.pi * np.square(r2) - lens_area(t, r1, r2)


def intersection_area(disks):
    """Area common to every disk in ``disks`` (any count >= 1)."""
    disks = list(disks)
    if not disks:
        raise ValueError("need at least one disk")
    cx = np.array([d.x for d in disks], float)
    cy = np.array([d.y for d in disks], float)
    r = np.array([d.radius for d in disks], float)
    return float(_intersection_area(cx, cy, r))


def intersection_area_by_chords(disks):
    """Same as :func:`intersection_area` but always by adaptive chord quadrature."""
    disks = list(disks)
    cx = np.array([d.x for d in disks], float)
    cy = np.array([d.y for d in disks], float)
    r = np.array([d.radius for d in disks], float)
    return float(_intersection_by_chords(cx, cy, r))


def disk_union2_overlap(probe: Disk, t, r_I):
    """Area of ``probe`` inside the union of two radius-``r_I`` disks at (+-t/2, 0)."""
    if not t >= 0:
        raise ValueError(f"separation must be >= 0, got {t}")
    _check_radius(r_I)
    return float(_s_i2(probe.x, probe.y, probe.radius, float(t), float(r_I)))


@njit(nogil=True)
def _s_i2_many(px, py, R_p, t, r_I):
    out = np.empty(px.shape[0])
    for k in range(px.shape[0]):
        out[k] = _s_i2(px[k], py[k], R_p, t, r_I)
    return out


def s_i2(r, theta, R_p, t, r_I):
    """:func:`disk_union2_overlap` with the probe center given in polar form.

    Broadcasts over ``r`` and ``theta``.
    """
    _check_radius(R_p)
    _check_radius(r_I)
    if not t >= 0:
        raise ValueError(f"separation must be >= 0, got {t}")
    r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
    px = (r * np.cos(theta)).ravel()
    py = (r * np.sin(theta)).ravel()
    out = _s_i2_many(px, py, float(R_p), float(t), float(r_I)).reshape(r.shape)
    return float(out) if out.ndim == 0 else out


def overlap_integral(r, R_p, r_I, *, epsrel=1e-8):
    """``2 * int_0^r t * S_I(t, R_p, r_I) / (pi R_p^2) dt`` in square meters.

    Exactly ``r**2`` when ``r_I >= R_p + r``.
    """
    if not r >= 0:
        raise ValueError(f"upper limit must be >= 0, got {r}")
    _check_radius(R_p)
    _check_radius(r_I)
    if r == 0:
        return 0.0
    if r_I >= R_p + r:
        return float(r) ** 2
    norm = math.pi * R_p * R_p
    kinks = [p for p in (abs(r_I - R_p), r_I + R_p) if 0 < p < r]
    val, err, info = integrate.quad(lambda s: 2.0 * s * _lens(s, R_p, r_I) / norm, 0.0, r,
                                    points=kinks or None, epsabs=1e-10 * r * r,
                                    epsrel=epsrel, limit=200, full_output=True)[:3]
    if err > max(1e-10 * r * r, 10 * epsrel * abs(val)):
        raise QuadratureError("overlap_integral did not converge", err)
    return float(val)


def monte_carlo_area(indicator, bbox, n_samples, rng, *, chunk=1_000_000):
    """Rejection-sampling area estimate of ``{p in bbox : indicator(x, y)}``.

    ``bbox`` is ``(xmin, xmax, ymin, ymax)``. Returns ``(estimate, stderr)``.
    """
    xmin, xmax, ymin, ymax = bbox
    box = (xmax - xmin) * (ymax - ymin)
    hits = 0
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        x = rng.uniform(xmin, xmax, m)
        y = rng.uniform(ymin, ymax, m)
        hits += int(np.count_nonzero(indicator(x, y)))
        done += m
    p = hits / n_samples
    return box * p, box * math.sqrt(p * (1.0 - p) / n_samples)
