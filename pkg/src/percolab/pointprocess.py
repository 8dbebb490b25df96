"""Sampling the primary and secondary Poisson processes in a finite window.

Points are drawn as an ordered stream: the k-th point carries a *birth
density* Gamma_k / area, where Gamma_k is the k-th arrival of a unit-rate
Poisson process. The process at density lambda is the prefix of points born
at or below lambda, so realizations at different densities that share a
stream are nested. That coupling is what makes crossing indicators monotone
in both densities on a fixed seed.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from percolab.units import from_per_km2

ROLES = {"primary": 0, "secondary": 1}
BLOCK = 512


@dataclass(frozen=True)
class RadioParams:
    """Ranges in meters.

    R_p, R_I: primary transmission and interference range.
    r_p, r_I: secondary transmission and interference range.
    """

    R_p: float
    R_I: float
    r_p: float
    r_I: float

    def __post_init__(self):
        for name in ("R_p", "R_I", "r_p", "r_I"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if self.r_p >= self.r_I:
            warnings.warn(f"r_p = {self.r_p} >= r_I = {self.r_I}; the critical-density upper "
                          "bound assumes the transmission range is below the interference range",
                          stacklevel=3)

    @property
    def padding(self):
        """Smallest padding that makes opportunity evaluation exact inside the window."""
        return max(self.R_I, self.r_I) + self.R_p

    def replace(self, **changes):
        values = {k: getattr(self, k) for k in ("R_p", "R_I", "r_p", "r_I")}
        values.update(changes)
        return RadioParams(**values)


@dataclass(frozen=True)
class DensityPair:
    """``(lambda_S, lambda_PT)`` in users per square meter."""

    lambda_S: float
    lambda_PT: float

    def __post_init__(self):
        if not (self.lambda_S >= 0 and self.lambda_PT >= 0):
            raise ValueError(f"densities must be >= 0, got {self}")

    @classmethod
    def per_km2(cls, lambda_S, lambda_PT):
        return cls(from_per_km2(lambda_S), from_per_km2(lambda_PT))


@dataclass(frozen=True)
class Window:
    """Observation window ``[0, width] x [0, height]``; primaries fill it plus ``padding``."""

    width: float
    height: float
    padding: float = 0.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"window sides must be positive, got {self.width} x {self.height}")
        if not self.padding >= 0:
            raise ValueError(f"padding must be >= 0, got {self.padding}")

    @classmethod
    def for_params(cls, width, height, params: RadioParams):
        return cls(width, height, params.padding)

    @property
    def area(self):
        return self.width * self.height

    @property
    def padded_area(self):
        return (self.width + 2 * self.padding) * (self.height + 2 * self.padding)


def make_rng_stream(master_seed, realization_index, role):
    """Independent generator keyed by ``(master_seed, realization_index, role)``."""
    if role not in ROLES:
        raise ValueError(f"role must be one of {sorted(ROLES)}, got {role!r}")
    seq = np.random.SeedSequence(entropy=int(master_seed) & (2**64 - 1),
                                 spawn_key=(int(realization_index), ROLES[role]))
    return np.random.Generator(np.random.PCG64(seq))


def _stream_prefix(rng, expected, width):
    # Draw BLOCK-sized chunks of (arrival gap, width uniforms) until the
    # cumulative arrival passes ``expected``; the draw order never depends
    # on ``expected``, so longer prefixes extend shorter ones.
    arrivals = []
    uniforms = []
    last = 0.0
    while last <= expected:
        gaps = rng.standard_exponential(BLOCK)
        u = rng.random((BLOCK, width))
        cum = last + np.cumsum(gaps)
        arrivals.append(cum)
        uniforms.append(u)
        last = cum[-1]
    arrivals = np.concatenate(arrivals) if arrivals else np.empty(0)
    uniforms = np.concatenate(uniforms) if uniforms else np.empty((0, width))
    n = int(np.searchsorted(arrivals, expected, side="right"))
    return arrivals[:n], uniforms[:n]


def sample_primary(params: RadioParams, lambda_PT, window: Window, rng):
    """Primary pairs on the padded window.

    Returns ``(tx, rx, birth)``: two ``(n, 2)`` arrays and the birth density
    of each pair. Each receiver is uniform on the radius-``R_p`` disk about
    its transmitter.
    """
    if window.padding < params.padding * (1 - 1e-12):
        raise ValueError(f"window padding {window.padding} is below the required "
                         f"max(R_I, r_I) + R_p = {params.padding}")
    if not lambda_PT >= 0:
        raise ValueError(f"lambda_PT must be >= 0, got {lambda_PT}")
    area = window.padded_area
    if lambda_PT == 0:
        return np.empty((0, 2)), np.empty((0, 2)), np.empty(0)
    arrivals, u = _stream_prefix(rng, lambda_PT * area, 4)
    pad = window.padding
    tx = np.column_stack([-pad + u[:, 0] * (window.width + 2 * pad),
                          -pad + u[:, 1] * (window.height + 2 * pad)])
    d = params.R_p * np.sqrt(u[:, 2])
    phi = 2.0 * np.pi * u[:, 3]
    rx = tx + np.column_stack([d * np.cos(phi), d * np.sin(phi)])
    return tx, rx, arrivals / area


def sample_secondary(lambda_S, window: Window, rng):
    """Secondary users on the unpadded window: ``(points, birth)``."""
    if not lambda_S >= 0:
        raise ValueError(f"lambda_S must be >= 0, got {lambda_S}")
    if lambda_S == 0:
        return np.empty((0, 2)), np.empty(0)
    arrivals, u = _stream_prefix(rng, lambda_S * window.area, 2)
    pts = np.column_stack([u[:, 0] * window.width, u[:, 1] * window.height])
    return pts, arrivals / window.area


@dataclass
class Realization:
    """One snapshot of the heterogeneous network.

    ``primary_birth`` / ``secondary_birth`` are the birth densities (m^-2)
    of each point; all are at most the corresponding entry of ``density``.
    """

    params: RadioParams
    density: DensityPair
    window: Window
    tx: np.ndarray
    rx: np.ndarray
    primary_birth: np.ndarray
    secondary: np.ndarray
    secondary_birth: np.ndarray
    master_seed: int = 0
    index: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_primary(self):
        return self.tx.shape[0]

    @property
    def n_secondary(self):
        return self.secondary.shape[0]

    def restrict(self, lambda_S=None, lambda_PT=None):
        """The nested realization at lower densities (same seed, prefix of each stream)."""
        lam_s = self.density.lambda_S if lambda_S is None else lambda_S
        lam_p = self.density.lambda_PT if lambda_PT is None else lambda_PT
        if lam_s > self.density.lambda_S or lam_p > self.density.lambda_PT:
            raise ValueError("restrict can only lower densities")
        ks = int(np.searchsorted(self.secondary_birth, lam_s * (1 + 1e-15), side="right"))
        kp = int(np.searchsorted(self.primary_birth, lam_p * (1 + 1e-15), side="right"))
        return Realization(self.params, DensityPair(lam_s, lam_p), self.window,
                           self.tx[:kp], self.rx[:kp], self.primary_birth[:kp],
                           self.secondary[:ks], self.secondary_birth[:ks],
                           self.master_seed, self.index, dict(self.meta))

    def node_rows(self):
        """``(role, x, y, pair_id)`` rows; pair_id is -1 for secondary users."""
        for k in range(self.n_primary):
            yield ("ptx", float(self.tx[k, 0]), float(self.tx[k, 1]), k)
            yield ("prx", float(self.rx[k, 0]), float(self.rx[k, 1]), k)
        for k in range(self.n_secondary):
            yield ("su", float(self.secondary[k, 0]), float(self.secondary[k, 1]), -1)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("role", "x", "y", "pair_id"))
        for role, x, y, pid in self.node_rows():
            writer.writerow((role, repr(x), repr(y), pid))
        return buf.getvalue()

    def to_json(self):
        return json.dumps({
            "params": {k: getattr(self.params, k) for k in ("R_p", "R_I", "r_p", "r_I")},
            "density": {"lambda_S": self.density.lambda_S,
                        "lambda_PT": self.density.lambda_PT},
            "window": {"width": self.window.width, "height": self.window.height,
                       "padding": self.window.padding},
            "master_seed": self.master_seed,
            "index": self.index,
            "nodes": [{"role": r, "x": x, "y": y, "pair_id": p}
                      for r, x, y, p in self.node_rows()],
        }, indent=1)

    @classmethod
    def from_csv(cls, text, params, density, window, master_seed=0, index=0):
        """Rebuild node positions from :meth:`to_csv` output (birth densities are lost)."""
        tx, rx, su = {}, {}, []
        for row in csv.DictReader(io.StringIO(text)):
            xy = (float(row["x"]), float(row["y"]))
            if row["role"] == "ptx":
                tx[int(row["pair_id"])] = xy
            elif row["role"] == "prx":
                rx[int(row["pair_id"])] = xy
            elif row["role"] == "su":
                su.append(xy)
            else:
                raise ValueError(f"unknown role {row['role']!r}")
        if tx.keys() != rx.keys():
            raise ValueError("every primary transmitter needs exactly one receiver")
        ids = sorted(tx)
        n = len(ids)
        return cls(params, density, window,
                   np.array([tx[i] for i in ids], float).reshape(n, 2),
                   np.array([rx[i] for i in ids], float).reshape(n, 2),
                   np.full(n, density.lambda_PT),
                   np.array(su, float).reshape(len(su), 2),
                   np.full(len(su), density.lambda_S), master_seed, index)


def sample_realization(params: RadioParams, density: DensityPair, window: Window,
                       master_seed=0, index=0) -> Realization:
    """Realization ``index`` of the experiment seeded by ``master_seed``."""
    tx, rx, pbirth = sample_primary(params, density.lambda_PT, window,
                                    make_rng_stream(master_seed, index, "primary"))
    su, sbirth = sample_secondary(density.lambda_S, window,
                                  make_rng_stream(master_seed, index, "secondary"))
    return Realization(params, density, window, tx, rx, pbirth, su, sbirth,
                       int(master_seed), int(index))
