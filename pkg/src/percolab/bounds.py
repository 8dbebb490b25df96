"""Analytical side of the lab: conditional degree, region bounds, power design.

Densities are in m^-2 and lengths in meters throughout.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate, optimize
from scipy.stats import qmc

from percolab._degree_kernel import degree_exponent, union_overlap_integral
from percolab.curves import BoundaryCurve
from percolab.geometry import lens_area, overlap_integral, s_i2
from percolab.pointprocess import DensityPair, RadioParams
from percolab.quadrature import QuadratureError, adaptive_rule


@dataclass(frozen=True)
class PercolationConstants:
    """Critical density of the unit-range Boolean model, with an optional rigorous bracket."""

    lambda_c_unit: float = 1.44
    bracket: tuple | None = (0.768, 3.372)

    def __post_init__(self):
        if not self.lambda_c_unit > 0:
            raise ValueError(f"lambda_c_unit must be positive, got {self.lambda_c_unit}")
        if self.bracket is not None:
            lo, hi = self.bracket
            if not lo < self.lambda_c_unit < hi:
                raise ValueError(f"lambda_c_unit {self.lambda_c_unit} outside bracket {self.bracket}")

    def bracket_constants(self):
        """The two ends of the bracket as stand-alone constants."""
        if self.bracket is None:
            raise ValueError("no bracket supplied")
        lo, hi = self.bracket
        return (PercolationConstants(lo, None), PercolationConstants(hi, None))


DEFAULT_CONSTANTS = PercolationConstants()


# --------------------------------------------------------------------------
# opportunities

def blocked_area(params: RadioParams):
    """pi (r_I^2 + R_I^2 - I): the expected exclusion area per unit primary density."""
    I = overlap_integral(params.R_I, params.R_p, params.r_I)
    return math.pi * (params.r_I ** 2 + params.R_I ** 2 - I)


def opportunity_probability(params: RadioParams, lambda_PT):
    """Probability that a single secondary user sees a spectrum opportunity."""
    return np.exp(-np.asarray(lambda_PT, float) * blocked_area(params))[()]


def site_occupation_probability(params: RadioParams, density: DensityPair):
    """Chance that a lattice cell of side r_p/(2 sqrt 2) holds a user seeing an opportunity."""
    occupied = -math.expm1(-density.lambda_S * params.r_p ** 2 / 8.0)
    return occupied * float(opportunity_probability(params, density.lambda_PT))


# --------------------------------------------------------------------------
# conditional average degree

class DegreeModel:
    """Caches E(t) so g(lambda_PT) can be re-evaluated cheaply at many densities.

    ``g(lam) = int_0^{r_p} (2t / r_p^2) exp(-lam E(t)) dt``. The outer
    integral is adaptive in t for every ``lam``; E is computed once per
    distinct node and memoized.
    """

    def __init__(self, params: RadioParams, *, epsrel=1e-9, inner_epsrel=1e-8, floor_rel=1e-7):
        self.params = params
        self.epsrel = epsrel
        self.inner_epsrel = inner_epsrel
        self.floor_rel = floor_rel
        self.overlap_I = overlap_integral(params.R_I, params.R_p, params.r_I, epsrel=1e-12)
        self._E = {}
        self._lock = threading.Lock()
        rp = params.r_p
        self._breaks = tuple(sorted({rp * 2.0 ** -k for k in range(1, 7)}
                                    | {2 * params.R_I, 2 * params.r_I}))

    def exponent(self, ts):
        """E(t) for an array of separations."""
        ts = np.asarray(ts, float)
        with self._lock:
            missing = np.array(sorted({float(t) for t in ts.ravel()} - self._E.keys()))
        if missing.size:
            p = self.params
            vals, ok = degree_exponent(missing, p.R_p, p.R_I, p.r_I, self.overlap_I,
                                       self.inner_epsrel)
            if not ok:
                raise QuadratureError("union overlap integral did not converge", math.nan)
            with self._lock:
                self._E.update(zip(missing.tolist(), vals.tolist()))
        with self._lock:
            return np.array([self._E[float(t)] for t in ts.ravel()]).reshape(ts.shape)

    def g(self, lambda_PT):
        lam = float(lambda_PT)
        if lam < 0:
            raise ValueError(f"lambda_PT must be >= 0, got {lam}")
        if lam == 0:
            return 1.0
        rp = self.params.r_p
        rule = adaptive_rule(lambda t: 2.0 * t / rp ** 2 * np.exp(-lam * self.exponent(t)),
                             0.0, rp, breakpoints=self._breaks, epsrel=self.epsrel,
                             epsabs=1e-300, limit=60,
                             floor_rel=self.floor_rel)
        return min(1.0, rule.value)

    def mu(self, density: DensityPair):
        return density.lambda_S * math.pi * self.params.r_p ** 2 * self.g(density.lambda_PT)

    def g_inverse(self, target, *, tol=1e-9):
        """The lambda_PT with g(lambda_PT) = target."""
        y = float(target)
        if not 0 < y <= 1:
            raise ValueError(f"target must lie in (0, 1], got {y}")
        if y == 1:
            return 0.0
        hi = 1.0 / blocked_area(self.params)
        while self.g(hi) > y:
            hi *= 2.0
            if hi > 1e12:
                raise QuadratureError("g_inverse bracket expansion failed", hi)
        lo = 0.0
        root = optimize.brentq(lambda lam: self.g(lam) - y, lo, hi,
                               xtol=1e-30, rtol=4 * np.finfo(float).eps, maxiter=300)
        resid = abs(self.g(root) - y)
        if resid > tol:
            raise QuadratureError(f"g_inverse residual {resid:.3g} exceeds {tol}", resid)
        return float(root)


@lru_cache(maxsize=64)
def degree_model(params: RadioParams) -> DegreeModel:
    return DegreeModel(params)


def g(params: RadioParams, lambda_PT):
    """Probability of a bidirectional opportunity to a uniformly placed neighbor."""
    return degree_model(params).g(lambda_PT)


def g_inverse(params: RadioParams, target):
    return degree_model(params).g_inverse(target)


def cond_avg_degree(params: RadioParams, density: DensityPair):
    """Expected neighbor count of a user that sees an opportunity."""
    return degree_model(params).mu(density)


def _check_far_field(params):
    if params.r_I < params.R_p + params.R_I:
        raise ValueError(f"needs r_I >= R_p + R_I, got r_I = {params.r_I} < "
                         f"{params.R_p + params.R_I}")


def cond_avg_degree_far_field(params: RadioParams, density: DensityPair, *, epsrel=1e-12):
    """The same quantity through the simplified exponent pi r_I^2 - S_I(t, r_I, r_I).

    Only valid when r_I >= R_p + R_I; used as an independent cross-check.
    """
    _check_far_field(params)
    rp, rI, lam = params.r_p, params.r_I, density.lambda_PT

    def f(t):
        return 2 * t / rp ** 2 * math.exp(-lam * (math.pi * rI ** 2 - float(lens_area(t, rI, rI))))

    val = integrate.quad(f, 0.0, rp, epsabs=0.0, epsrel=epsrel, limit=500)[0]
    return density.lambda_S * math.pi * rp ** 2 * val


def mu_asymptotic_bound(params: RadioParams, density: DensityPair):
    """2 pi lambda_S / (lambda_PT^2 r_I^2), an upper bound on mu for large r_I."""
    _check_far_field(params)
    if not params.r_p < params.r_I:
        raise ValueError("needs r_p = beta r_I with beta < 1")
    if not density.lambda_PT > 0:
        raise ValueError("needs lambda_PT > 0")
    return 2 * math.pi * density.lambda_S / (density.lambda_PT ** 2 * params.r_I ** 2)


def union_overlap_integral_qmc(params: RadioParams, t, n=2 ** 16, seed=0):
    """Scrambled-Sobol estimate of the union overlap integral J(t).

    Returns ``(estimate, stderr)`` from 8 independent scramblings.
    """
    R_I, R_p, r_I = params.R_I, params.R_p, params.r_I
    x0, x1 = -t / 2 - R_I, t / 2 + R_I
    box = (x1 - x0) * 2 * R_I
    ests = []
    for k in range(8):
        u = qmc.Sobol(2, scramble=True, seed=np.random.default_rng([seed, k])).random(n)
        x = x0 + u[:, 0] * (x1 - x0)
        y = -R_I + u[:, 1] * 2 * R_I
        inside = ((x + t / 2) ** 2 + y ** 2 <= R_I ** 2) | ((x - t / 2) ** 2 + y ** 2 <= R_I ** 2)
        vals = np.zeros(n)
        idx = np.flatnonzero(inside)
        vals[idx] = s_i2(np.hypot(x[idx], y[idx]), np.arctan2(y[idx], x[idx]), R_p, t, r_I)
        ests.append(box * vals.mean() / (math.pi * R_p ** 2))
    ests = np.array(ests)
    return float(ests.mean()), float(ests.std(ddof=1) / math.sqrt(ests.size))


def union_overlap_integral_quad(params: RadioParams, t, epsrel=1e-7):
    """J(t) by the deterministic polar quadrature."""
    val, err, ok = union_overlap_integral(float(t), params.R_p, params.R_I, params.r_I, epsrel)
    if not ok:
        raise QuadratureError("union overlap integral did not converge", err)
    return val


# --------------------------------------------------------------------------
# region bounds

def outer_bound_curve(params: RadioParams, lambda_S_grid) -> BoundaryCurve:
    """lambda_PT = g^-1(1 / (lambda_S pi r_p^2)); points with mu <= 1 at lambda_PT = 0 are absent."""
    model = degree_model(params)
    xs, ys, absent = [], [], []
    for lam_s in np.asarray(lambda_S_grid, float):
        mean_nbrs = lam_s * math.pi * params.r_p ** 2
        if mean_nbrs < 1 - 1e-12:
            absent.append((float(lam_s), f"lambda_S pi r_p^2 = {mean_nbrs:.4g} < 1"))
            continue
        xs.append(lam_s)
        ys.append(model.g_inverse(min(1.0, 1.0 / mean_nbrs)))
    return BoundaryCurve.exact("outer-bound", xs, ys, absent)


def dependence_range(params: RadioParams) -> int:
    """Lattice distance beyond which site states are independent."""
    reach = max(Fraction(params.R_I), Fraction(params.r_I)) + Fraction(params.r_p) / 4
    return math.ceil(8 * reach / Fraction(params.r_p)) - 1


@dataclass(frozen=True)
class InnerBound:
    """``lambda_PT`` may underflow to 0.0; ``log10_abs`` keeps its magnitude."""

    lambda_PT: float
    positive: bool
    log10_abs: float


def inner_bound_lambda_pt(params: RadioParams, lambda_S) -> InnerBound:
    """Largest lambda_PT certified to keep the network connected at this lambda_S."""
    if not lambda_S > 0:
        raise ValueError(f"lambda_S must be positive, got {lambda_S}")
    k = dependence_range(params)
    m = (2 * k + 1) ** 2
    with mpmath.workdps(40):
        x = mpmath.mpf(lambda_S) * mpmath.mpf(params.r_p) ** 2 / 8
        log_num = mpmath.log1p(-mpmath.exp(-x))
        log_den = mpmath.log1p(-mpmath.power(3, -m))
        value = (log_num - log_den) / mpmath.mpf(blocked_area(params))
        positive = bool(value > 0)
        log10_abs = float(mpmath.log10(abs(value))) if value != 0 else -math.inf
        return InnerBound(float(value), positive, log10_abs)


def inner_bound_curve(params: RadioParams, lambda_S_grid) -> BoundaryCurve:
    xs, ys, absent = [], [], []
    for lam_s in np.asarray(lambda_S_grid, float):
        b = inner_bound_lambda_pt(params, lam_s)
        if b.positive:
            xs.append(lam_s)
            ys.append(b.lambda_PT)
        else:
            absent.append((float(lam_s), "bound is vacuous (non-positive)"))
    return BoundaryCurve.exact("inner-bound", xs, ys, absent)


def lambda_c_scaled(r_p, constants: PercolationConstants = DEFAULT_CONSTANTS):
    """Critical density of the Boolean model with range r_p."""
    if not r_p > 0:
        raise ValueError(f"r_p must be positive, got {r_p}")
    return constants.lambda_c_unit / r_p ** 2


def t22_upper_bound(params: RadioParams, constants: PercolationConstants = DEFAULT_CONSTANTS):
    """Upper bound on the largest primary density the secondary network survives."""
    reach = max(params.R_I, params.r_I)
    if not params.r_p < 2 * reach:
        raise ValueError(f"needs r_p < 2 max(R_I, r_I), got r_p = {params.r_p}")
    return constants.lambda_c_unit / (4 * reach ** 2 - params.r_p ** 2)


def t22_curve(params: RadioParams, lambda_S_grid,
              constants: PercolationConstants = DEFAULT_CONSTANTS) -> BoundaryCurve:
    grid = np.asarray(lambda_S_grid, float)
    return BoundaryCurve.exact("t22", grid, np.full(grid.size, t22_upper_bound(params, constants)))


# --------------------------------------------------------------------------
# power design

def power_design_bound(r_I, R_I, beta, constants: PercolationConstants = DEFAULT_CONSTANTS):
    """The upper bound with r_p = beta r_I, as a function of the secondary interference range."""
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    r = np.asarray(r_I, float)
    if np.any(r <= 0) or not R_I > 0:
        raise ValueError("ranges must be positive")
    lc = constants.lambda_c_unit
    inner = r <= R_I
    out = np.empty(r.shape)
    out[inner] = lc / (4 * R_I ** 2 - beta ** 2 * r[inner] ** 2)
    out[~inner] = lc / ((4 - beta ** 2) * r[~inner] ** 2)
    return out[()]


def power_map(p_tx, alpha, reference):
    """Range reached with transmit power ``p_tx`` given a reference ``(p0, r0)``."""
    p0, r0 = reference
    p = np.asarray(p_tx, float)
    if np.any(p <= 0) or not alpha > 0 or not p0 > 0:
        raise ValueError("powers and alpha must be positive")
    return (r0 * (p / p0) ** (1.0 / alpha))[()]
