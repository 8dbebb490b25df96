"""Monte-Carlo experiments on the secondary network.

Realization ``i`` of an experiment always uses the streams keyed by
``(master_seed, i)``, whatever the densities, so estimates at different
density pairs are coupled. The connectivity boundary exploits this: each
realization's crossing dies at one exact primary density (see
:func:`percolab.oppgraph.crossing_threshold`), and the crossing probability
at any lambda_PT is the fraction of those thresholds above it.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from percolab import bounds
from percolab.curves import BoundaryCurve
from percolab.oppgraph import (build_graph, crossing_threshold, detect_crossings,
                               evaluate_opportunities, label_components, takeoff_threshold)
from percolab.pointprocess import DensityPair, RadioParams, Window, sample_realization


class TakeoffError(ValueError):
    """The secondary density is too low to cross even without primary users."""


@dataclass(frozen=True)
class ExperimentConfig:
    params: RadioParams
    window: Window
    realizations: int = 200
    master_seed: int = 0
    crossing_threshold: float = 0.5
    margin: float | None = None
    direction: str = "LR"
    threads: int | None = None
    interior_margin: float | None = None

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError(f"realizations must be >= 1, got {self.realizations}")
        if not 0 < self.crossing_threshold < 1:
            raise ValueError(f"crossing_threshold must lie in (0, 1), got {self.crossing_threshold}")
        if self.window.padding < self.params.padding * (1 - 1e-12):
            raise ValueError(f"window padding {self.window.padding} < required {self.params.padding}")
        if self.direction not in ("LR", "TB"):
            raise ValueError(f"direction must be 'LR' or 'TB', got {self.direction!r}")
        if min(self.window.width, self.window.height) <= 2 * self.band:
            raise ValueError("window must be wider than two crossing bands")

    @classmethod
    def square(cls, params, side=2000.0, **kwargs):
        return cls(params, Window.for_params(side, side, params), **kwargs)

    @property
    def band(self):
        return self.params.r_p if self.margin is None else self.margin

    @property
    def interior(self):
        return self.params.r_p if self.interior_margin is None else self.interior_margin

    @property
    def workers(self):
        if self.threads:
            return self.threads
        env = os.environ.get("PERCOLAB_THREADS")
        return int(env) if env else (os.cpu_count() or 1)


def parallel_map(fn, n, workers):
    """``[fn(0), ..., fn(n-1)]``; order-independent of the worker count."""
    if workers <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


# --------------------------------------------------------------------------
# per-realization statistics

@dataclass(frozen=True)
class RealizationStats:
    index: int
    n_users: int
    n_flagged: int
    has_LR: bool
    has_TB: bool
    largest: int
    second: int
    interior_flagged: int
    interior_degree_sum: int


@dataclass
class Analysis:
    """Everything derived from one realization."""

    realization: object
    flags: np.ndarray
    graph: object
    labeling: object
    has_LR: bool
    has_TB: bool

    def stats(self, interior):
        flags = self.flags
        sizes = np.sort(np.bincount(self.labeling.labels[flags]))[::-1] if flags.any() \
            else np.zeros(0, int)
        sizes = sizes[sizes > 0]
        pts = self.realization.secondary
        w = self.realization.window
        inside = ((pts[:, 0] >= interior) & (pts[:, 0] <= w.width - interior)
                  & (pts[:, 1] >= interior) & (pts[:, 1] <= w.height - interior))
        sel = flags & inside
        return RealizationStats(
            index=self.realization.index,
            n_users=int(flags.size),
            n_flagged=int(flags.sum()),
            has_LR=self.has_LR,
            has_TB=self.has_TB,
            largest=int(sizes[0]) if sizes.size else 0,
            second=int(sizes[1]) if sizes.size > 1 else 0,
            interior_flagged=int(sel.sum()),
            interior_degree_sum=int(self.graph.degree[sel].sum()),
        )


def analyze(realization, margin=None):
    flags = evaluate_opportunities(realization)
    graph = build_graph(realization, flags)
    labeling = label_components(graph)
    lr, tb = detect_crossings(labeling, realization, margin=margin)
    return Analysis(realization, flags, graph, labeling, lr, tb)


def run_realizations(config: ExperimentConfig, density: DensityPair):
    def one(i):
        r = sample_realization(config.params, density, config.window, config.master_seed, i)
        return analyze(r, config.band).stats(config.interior)
    return parallel_map(one, config.realizations, config.workers)


# --------------------------------------------------------------------------
# estimators

@dataclass(frozen=True)
class CrossingEstimate:
    estimate: float
    stderr: float
    hits: int
    n: int

    def wilson(self, z=1.959963984540054):
        return wilson_interval(self.hits, self.n, z)


def wilson_interval(hits, n, z=1.0):
    p = hits / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if hits == 0 else max(0.0, center - half)
    hi = 1.0 if hits == n else min(1.0, center + half)
    return lo, hi


def _binomial(hits, n):
    p = hits / n
    return CrossingEstimate(p, math.sqrt(p * (1 - p) / n), hits, n)


def crossing_probability(config: ExperimentConfig, density: DensityPair) -> CrossingEstimate:
    """Fraction of realizations with a crossing in ``config.direction``."""
    stats = run_realizations(config, density)
    key = "has_LR" if config.direction == "LR" else "has_TB"
    return _binomial(sum(getattr(s, key) for s in stats), len(stats))


def giant_component_stats(config: ExperimentConfig, density: DensityPair):
    """Mean fraction of opportunity-seeing users in the largest and second-largest component."""
    stats = run_realizations(config, density)
    first = [s.largest / s.n_flagged if s.n_flagged else 0.0 for s in stats]
    second = [s.second / s.n_flagged if s.n_flagged else 0.0 for s in stats]
    return float(np.mean(first)), float(np.mean(second))


@dataclass(frozen=True)
class DegreeEstimate:
    mean: float
    stderr: float
    users: int


def degree_estimate(config: ExperimentConfig, density: DensityPair) -> DegreeEstimate:
    """Conditional average degree over interior users that see an opportunity.

    Users closer than ``config.interior`` to the window edge are excluded so
    their neighborhoods are complete. The ratio estimator's standard error
    treats realizations as independent clusters.
    """
    stats = run_realizations(config, density)
    d = np.array([s.interior_degree_sum for s in stats], float)
    n = np.array([s.interior_flagged for s in stats], float)
    total = n.sum()
    if total == 0:
        raise ValueError("no interior user saw an opportunity")
    ratio = d.sum() / total
    k = len(stats)
    resid = d - ratio * n
    se = math.sqrt((resid ** 2).sum() / (k * (k - 1))) / n.mean() if k > 1 else math.inf
    return DegreeEstimate(float(ratio), float(se), int(total))


def opportunity_fraction(config: ExperimentConfig, density: DensityPair):
    """Pooled fraction of users seeing an opportunity, with a cluster standard error."""
    stats = run_realizations(config, density)
    f = np.array([s.n_flagged for s in stats], float)
    n = np.array([s.n_users for s in stats], float)
    ratio = f.sum() / n.sum()
    k = len(stats)
    se = math.sqrt(((f - ratio * n) ** 2).sum() / (k * (k - 1))) / n.mean() if k > 1 else math.inf
    return float(ratio), float(se)


# --------------------------------------------------------------------------
# connectivity boundary

def crossing_thresholds(config: ExperimentConfig, lambda_S, lambda_PT_start=None):
    """Per realization, the primary density at which its crossing disappears."""
    start = lambda_PT_start
    if start is None:
        try:
            start = 2.0 * bounds.t22_upper_bound(config.params)
        except ValueError:
            start = 1.0 / (math.pi * max(config.params.R_I, config.params.r_I) ** 2)

    def one(i):
        lam = start
        while True:
            r = sample_realization(config.params, DensityPair(lambda_S, lam), config.window,
                                   config.master_seed, i)
            th = crossing_threshold(r, config.band, config.direction)
            if th < lam:
                return th
            lam *= 2.0

    return np.array(parallel_map(one, config.realizations, config.workers))


def probability_above(thresholds, lambda_PT):
    """Crossing probability at ``lambda_PT`` implied by the thresholds."""
    th = np.asarray(thresholds)
    return float(np.mean(th > lambda_PT))


def threshold_quantile(thresholds, level):
    """Smallest lambda_PT at which the implied crossing probability drops below ``level``."""
    th = np.sort(np.asarray(thresholds))[::-1]
    m = max(1, math.ceil(level * th.size - 1e-9))
    if m > th.size:
        return 0.0
    return float(th[m - 1])


@dataclass(frozen=True)
class BoundaryPoint:
    lambda_S: float
    lambda_PT_star: float
    ci_low: float
    ci_high: float
    thresholds: np.ndarray


def boundary_at(config: ExperimentConfig, lambda_S, thresholds=None) -> BoundaryPoint:
    """Minimum primary density with crossing probability below the threshold.

    The bracket comes from the same construction at the crossing threshold
    shifted to the ends of its one-sigma Wilson interval.
    """
    th = crossing_thresholds(config, lambda_S) if thresholds is None else np.asarray(thresholds)
    level = config.crossing_threshold
    p0 = probability_above(th, 0.0)
    if p0 < level:
        raise TakeoffError(f"crossing probability {p0:.3f} < {level} at lambda_PT = 0 "
                           f"(lambda_S = {lambda_S:.4g} m^-2 is below takeoff)")
    n = th.size
    lo_level, hi_level = wilson_interval(round(level * n), n, 1.0)
    star = threshold_quantile(th, level)
    ci_low = min(star, threshold_quantile(th, hi_level))
    ci_high = max(star, threshold_quantile(th, lo_level))
    return BoundaryPoint(float(lambda_S), star, ci_low, ci_high, th)


def sweep_region(config: ExperimentConfig, lambda_S_grid) -> BoundaryCurve:
    grid = np.asarray(lambda_S_grid, float)
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("lambda_S grid must be strictly increasing")
    rows, absent = [], []
    for lam in grid:
        try:
            pt = boundary_at(config, lam)
        except TakeoffError as exc:
            absent.append((float(lam), str(exc)))
            continue
        rows.append((pt.lambda_S, pt.lambda_PT_star, pt.ci_low, pt.ci_high))
    cols = np.array(rows, float).reshape(-1, 4)
    return BoundaryCurve("empirical", cols[:, 0], cols[:, 1], cols[:, 2], cols[:, 3], absent)


def takeoff_thresholds(config: ExperimentConfig, lambda_S_max, lambda_PT=0.0):
    """Per realization, the secondary density at which a crossing first appears."""
    def one(i):
        r = sample_realization(config.params, DensityPair(lambda_S_max, lambda_PT),
                               config.window, config.master_seed, i)
        return takeoff_threshold(r, config.band, config.direction)
    return np.array(parallel_map(one, config.realizations, config.workers))


def takeoff_density(config: ExperimentConfig, lambda_S_max, lambda_PT=0.0):
    """Smallest lambda_S whose crossing probability reaches the threshold."""
    th = np.sort(takeoff_thresholds(config, lambda_S_max, lambda_PT))
    m = max(1, math.ceil(config.crossing_threshold * th.size - 1e-9))
    if not np.isfinite(th[m - 1]):
        raise ValueError(f"no takeoff below lambda_S_max = {lambda_S_max:.4g} m^-2")
    return float(th[m - 1])


def boundary_by_bisection(config: ExperimentConfig, lambda_S, lambda_PT_max, steps=12):
    """Plain bisection on directly simulated crossing probabilities.

    Slower than :func:`boundary_at` and limited to a resolution of
    ``lambda_PT_max / 2**steps``; kept as an independent reference.
    Returns the final ``(low, high)`` bracket.
    """
    level = config.crossing_threshold

    def p(lam):
        return crossing_probability(config, DensityPair(lambda_S, lam)).estimate

    if p(0.0) < level:
        raise TakeoffError(f"crossing probability below {level} at lambda_PT = 0")
    lo, hi = 0.0, float(lambda_PT_max)
    if p(hi) >= level:
        raise ValueError("lambda_PT_max does not bracket the boundary")
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if p(mid) >= level:
            lo = mid
        else:
            hi = mid
    return lo, hi
