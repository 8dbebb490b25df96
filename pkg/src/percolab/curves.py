"""Boundary curves in the (lambda_S, lambda_PT) plane, empirical or analytical."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from percolab.units import to_per_km2

METHODS = ("empirical", "outer-bound", "inner-bound", "t22")
CSV_HEADER = ("lambda_S_per_km2", "lambda_PT_star_per_km2", "ci_low", "ci_high", "method")


@dataclass
class BoundaryCurve:
    """Samples ``(lambda_S, lambda_PT_star, ci_low, ci_high)`` in m^-2.

    ``absent`` lists grid points that produced no sample (below takeoff, or a
    bound whose precondition fails there) together with the reason.
    """

    method: str
    lambda_S: np.ndarray
    lambda_PT_star: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    absent: list = field(default_factory=list)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        self.lambda_S = np.asarray(self.lambda_S, float)
        self.lambda_PT_star = np.asarray(self.lambda_PT_star, float)
        self.ci_low = np.asarray(self.ci_low, float)
        self.ci_high = np.asarray(self.ci_high, float)
        n = self.lambda_S.size
        if not (self.lambda_PT_star.size == self.ci_low.size == self.ci_high.size == n):
            raise ValueError("curve columns differ in length")
        if n > 1 and np.any(np.diff(self.lambda_S) <= 0):
            raise ValueError("lambda_S must be strictly increasing")
        if np.any(self.ci_low > self.lambda_PT_star) or np.any(self.lambda_PT_star > self.ci_high):
            raise ValueError("need ci_low <= lambda_PT_star <= ci_high")

    @classmethod
    def exact(cls, method, lambda_S, values, absent=()):
        values = np.asarray(values, float)
        return cls(method, lambda_S, values, values.copy(), values.copy(), list(absent))

    def __len__(self):
        return self.lambda_S.size

    def at(self, lambda_S):
        """Sample value at a grid point, or ``None`` when absent."""
        hit = np.flatnonzero(np.isclose(self.lambda_S, lambda_S, rtol=1e-12, atol=0.0))
        return float(self.lambda_PT_star[hit[0]]) if hit.size else None

    def rows(self):
        for s, v, lo, hi in zip(self.lambda_S, self.lambda_PT_star, self.ci_low, self.ci_high):
            yield (to_per_km2(s), to_per_km2(v), to_per_km2(lo), to_per_km2(hi), self.method)


def format_float(x):
    return repr(float(x))


def curves_to_csv(curves):
    """One CSV text holding every curve; the ``method`` column tells them apart."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for curve in curves:
        for row in curve.rows():
            writer.writerow([format_float(v) for v in row[:4]] + [row[4]])
    return buf.getvalue()


def read_curves_csv(text):
    """Inverse of :func:`curves_to_csv`; returns ``{method: rows}`` in km^-2."""
    out = {}
    for row in csv.DictReader(io.StringIO(text)):
        out.setdefault(row["method"], []).append(
            tuple(float(row[k]) for k in CSV_HEADER[:4]))
    return out
