"""Adaptive Gauss-Kronrod (7/15) quadrature.

Two flavours live here: a numba kernel for scalar integrands called from
other jitted code, and a Python driver for vectorised integrands that also
hands back the final panel nodes so a caller can reuse them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

# QUADPACK qk15 abscissae (non-negative half) and weights.
XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Full 15-point rule on [-1, 1]; the Gauss points are the odd entries.
NODES15 = np.concatenate([-XGK[:-1], XGK[::-1]])
KRONROD15 = np.concatenate([WGK[:-1], WGK[::-1]])
GAUSS15 = np.zeros(15)
GAUSS15[1:7:2] = WG[:3]
GAUSS15[7] = WG[3]
GAUSS15[9:14:2] = WG[2::-1]


class QuadratureError(ArithmeticError):
    """Adaptive quadrature hit its panel limit before meeting tolerance."""

    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved error estimate {achieved:.3e})")
        self.achieved = achieved


# Integrands arrive as first-class functions, which numba cannot cache to disk.
@njit(nogil=True)
def _gk15_panel(f, a, b, args):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    res_k = 0.0
    res_g = 0.0
    for i in range(15):
        fx = f(c + h * NODES15[i], args)
        res_k += KRONROD15[i] * fx
        res_g += GAUSS15[i] * fx
    res_k *= h
    res_g *= h
    return res_k, abs(res_k - res_g)


@njit(nogil=True)
def gk15_adaptive(f, a, b, args, epsabs, epsrel, limit, n_init):
    """Globally adaptive GK15 of ``f(x, args)`` over [a, b].

    Returns ``(value, error_estimate, converged)``.
    """
    lo = np.empty(limit)
    hi = np.empty(limit)
    val = np.empty(limit)
    err = np.empty(limit)
    n = 0
    step = (b - a) / n_init
    for k in range(n_init):
        x0 = a + k * step
        x1 = b if k == n_init - 1 else a + (k + 1) * step
        v, e = _gk15_panel(f, x0, x1, args)
        lo[n] = x0
        hi[n] = x1
        val[n] = v
        err[n] = e
        n += 1
    while True:
        total = 0.0
        total_err = 0.0
        worst = 0
        for k in range(n):
            total += val[k]
            total_err += err[k]
            if err[k] > err[worst]:
                worst = k
        if total_err <= max(epsabs, epsrel * abs(total)):
            return total, total_err, True
        if n + 1 > limit:
            return total, total_err, False
        mid = 0.5 * (lo[worst] + hi[worst])
        v1, e1 = _gk15_panel(f, lo[worst], mid, args)
        v2, e2 = _gk15_panel(f, mid, hi[worst], args)
        hi_old = hi[worst]
        hi[worst] = mid
        val[worst] = v1
        err[worst] = e1
        lo[n] = mid
        hi[n] = hi_old
        val[n] = v2
        err[n] = e2
        n += 1


@dataclass(frozen=True)
class PanelRule:
    """Result of :func:`adaptive_rule`: an integral plus the rule that produced it.

    ``nodes``/``weights`` integrate any function over the same interval with
    the Kronrod weights of the accepted panels; ``values`` holds the
    integrand at ``nodes``.
    """

    value: float
    error: float
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray


def adaptive_rule(func, a, b, *, breakpoints=(), epsabs=0.0, epsrel=1e-8,
                  limit=400, floor_rel=None) -> PanelRule:
    """Adaptive GK15 for a vectorised ``func(x_array) -> array``.

    Panels are seeded at ``breakpoints`` (those outside (a, b) are ignored).
    When ``limit`` panels are not enough the result is still accepted if its
    error is within ``floor_rel`` (a noise floor for integrands that are
    themselves computed numerically); otherwise :class:`QuadratureError`.
    """
    edges = sorted({a, b, *(p for p in breakpoints if a < p < b)})
    panels = []  # (err, lo, hi, value, x, fx)

    def evaluate(lo, hi):
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        x = c + h * NODES15
        fx = np.asarray(func(x), dtype=float)
        vk = h * float(KRONROD15 @ fx)
        vg = h * float(GAUSS15 @ fx)
        return [abs(vk - vg), lo, hi, vk, x, fx]

    for lo, hi in zip(edges[:-1], edges[1:]):
        panels.append(evaluate(lo, hi))

    while True:
        total = sum(p[3] for p in panels)
        total_err = sum(p[0] for p in panels)
        if total_err <= max(epsabs, epsrel * abs(total)):
            break
        if len(panels) >= limit:
            if floor_rel is not None and total_err <= floor_rel * abs(total):
                break
            raise QuadratureError("adaptive_rule did not converge", total_err)
        worst = max(range(len(panels)), key=lambda k: panels[k][0])
        _, lo, hi, *_ = panels.pop(worst)
        mid = 0.5 * (lo + hi)
        panels.append(evaluate(lo, mid))
        panels.append(evaluate(mid, hi))

    panels.sort(key=lambda p: p[1])
    nodes = np.concatenate([p[4] for p in panels])
    weights = np.concatenate([0.5 * (p[2] - p[1]) * KRONROD15 for p in panels])
    values = np.concatenate([p[5] for p in panels])
    return PanelRule(total, total_err, nodes, weights, values)
