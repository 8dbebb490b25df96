"""Randomized checks of the analytic areas against rejection sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from percolab.geometry import (Disk, disk_union2_overlap, intersection_area, lens_area,
                               monte_carlo_area, union2_area)

KINDS = ("lens", "union2", "triple", "s_i2")
NEAR_TANGENT = 1e-10


@dataclass(frozen=True)
class GeometryCase:
    kind: str
    disks: tuple          # every Disk involved; for s_i2 the probe comes first
    near_tangent: bool

    def analytic(self):
        d = self.disks
        if self.kind == "lens":
            return float(lens_area(math.hypot(d[1].x - d[0].x, d[1].y - d[0].y),
                                   d[0].radius, d[1].radius))
        if self.kind == "union2":
            return float(union2_area(math.hypot(d[1].x - d[0].x, d[1].y - d[0].y),
                                     d[0].radius, d[1].radius))
        if self.kind == "triple":
            return intersection_area(d)
        # s_i2: the pair sits at (+-t/2, 0) by construction
        return disk_union2_overlap(d[0], d[2].x - d[1].x, d[1].radius)

    def indicator(self, x, y):
        d = self.disks
        if self.kind == "union2":
            return d[0].contains(x, y) | d[1].contains(x, y)
        if self.kind == "s_i2":
            return d[0].contains(x, y) & (d[1].contains(x, y) | d[2].contains(x, y))
        inside = d[0].contains(x, y)
        for disk in d[1:]:
            inside &= disk.contains(x, y)
        return inside

    def bbox(self):
        d = self.disks
        if self.kind == "union2":
            pool = d
        elif self.kind == "s_i2":
            pool = d[:1]
        else:
            pool = (min(d, key=lambda c: c.radius),)
        return (min(c.x - c.radius for c in pool), max(c.x + c.radius for c in pool),
                min(c.y - c.radius for c in pool), max(c.y + c.radius for c in pool))


def _pair(rng, tangent):
    r1, r2 = rng.uniform(0.5, 2.0, 2)
    if tangent == "outer":
        t = (r1 + r2) * (1 - NEAR_TANGENT)
    elif tangent == "inner":
        t = abs(r1 - r2) * (1 + NEAR_TANGENT) + NEAR_TANGENT * max(r1, r2)
    else:
        t = rng.uniform(abs(r1 - r2), r1 + r2)
    phi = rng.uniform(0, 2 * math.pi)
    return Disk(0.0, 0.0, r1), Disk(t * math.cos(phi), t * math.sin(phi), r2)


def random_case(rng, kind, near_tangent):
    """One randomized configuration; ``near_tangent`` puts two boundaries 1e-10 apart."""
    tangent = rng.choice(["outer", "inner"]) if near_tangent else None
    if kind in ("lens", "union2"):
        return GeometryCase(kind, _pair(rng, tangent), near_tangent)
    if kind == "triple":
        a, b = _pair(rng, tangent)
        # center the third disk near the lens so all three overlap
        t = math.hypot(b.x, b.y)
        s = (t * t + a.radius ** 2 - b.radius ** 2) / (2 * t)
        jitter = rng.uniform(-0.3, 0.3, 2)
        c = Disk(s * b.x / t + jitter[0], s * b.y / t + jitter[1], rng.uniform(0.8, 2.0))
        return GeometryCase(kind, (a, b, c), near_tangent)
    r_I = rng.uniform(0.8, 2.0)
    t = rng.uniform(0.0, 1.8 * r_I)
    R_p = rng.uniform(0.3, 1.5)
    d1, d2 = Disk(-t / 2, 0.0, r_I), Disk(t / 2, 0.0, r_I)
    if near_tangent:
        # probe internally or externally tangent to the left disk
        phi = rng.uniform(0, 2 * math.pi)
        if tangent == "outer":
            dist = (r_I + R_p) * (1 - NEAR_TANGENT)
        else:
            R_p = min(R_p, 0.9 * r_I)
            dist = (r_I - R_p) * (1 + NEAR_TANGENT) + NEAR_TANGENT * r_I
        probe = Disk(-t / 2 + dist * math.cos(phi), dist * math.sin(phi), R_p)
    else:
        rho, phi = r_I * math.sqrt(rng.uniform()), rng.uniform(0, 2 * math.pi)
        side = rng.choice([-0.5, 0.5]) * t
        probe = Disk(side + rho * math.cos(phi), rho * math.sin(phi), R_p)
    return GeometryCase("s_i2", (probe, d1, d2), near_tangent)


def geometry_cases(n, seed=0):
    """``n`` cases cycling through every kind; every third one is near-tangent."""
    rng = np.random.default_rng(seed)
    return [random_case(rng, KINDS[k % len(KINDS)], k % 3 == 2) for k in range(n)]


@dataclass(frozen=True)
class ValidationRow:
    case: int
    kind: str
    near_tangent: bool
    analytic: float
    monte_carlo: float
    stderr: float

    @property
    def z(self):
        return abs(self.analytic - self.monte_carlo) / self.stderr


def validate_geometry(n_configs=50, mc_samples=10_000_000, seed=0):
    """Compare every case against a ``mc_samples`` rejection-sampling estimate.

    The standard error is floored at one sample's worth of area so cases
    with no hits (or all hits) still get a finite score.
    """
    rows = []
    cases = geometry_cases(n_configs, seed)
    for k, case in enumerate(cases):
        rng = np.random.default_rng([seed, k, 1])
        box = case.bbox()
        est, se = monte_carlo_area(case.indicator, box, mc_samples, rng)
        floor = (box[1] - box[0]) * (box[3] - box[2]) / mc_samples
        rows.append(ValidationRow(k, case.kind, case.near_tangent, case.analytic(), est,
                                  max(se, floor)))
    return rows
