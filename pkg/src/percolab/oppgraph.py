"""Spectrum opportunities, the secondary graph, components and crossings.

Distances are compared inclusively: a primary transmitter at exactly R_I (or
a receiver at exactly r_I) blocks, and users exactly r_p apart are linked.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from percolab.pointprocess import RadioParams, Realization


class EmptySampleError(ValueError):
    """No user qualified for an average."""


# --------------------------------------------------------------------------
# spatial hash

@dataclass(frozen=True)
class SpatialHash:
    """Uniform grid over a point set: points of cell c are ``order[start[c]:start[c+1]]``."""

    cell: float
    x0: float
    y0: float
    nx: int
    ny: int
    order: np.ndarray
    start: np.ndarray

    @classmethod
    def build(cls, points, cell, bounds=None):
        points = np.asarray(points, float).reshape(-1, 2)
        if not cell > 0:
            raise ValueError(f"cell size must be positive, got {cell}")
        if bounds is None:
            if points.shape[0]:
                bounds = (points[:, 0].min(), points[:, 0].max(),
                          points[:, 1].min(), points[:, 1].max())
            else:
                bounds = (0.0, 0.0, 0.0, 0.0)
        xmin, xmax, ymin, ymax = bounds
        nx = max(1, int(math.floor((xmax - xmin) / cell)) + 1)
        ny = max(1, int(math.floor((ymax - ymin) / cell)) + 1)
        ix = np.clip(((points[:, 0] - xmin) // cell).astype(np.int64), 0, nx - 1)
        iy = np.clip(((points[:, 1] - ymin) // cell).astype(np.int64), 0, ny - 1)
        ids = ix * ny + iy
        order = np.argsort(ids, kind="stable").astype(np.int64)
        counts = np.bincount(ids, minlength=nx * ny)
        start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        return cls(float(cell), float(xmin), float(ymin), nx, ny, order, start)

    def query(self, points, x, y, radius):
        """Indices of ``points`` within ``radius`` of ``(x, y)`` (radius <= cell)."""
        return _query(np.asarray(points, float), self.order, self.start, self.x0, self.y0,
                      self.cell, self.nx, self.ny, float(x), float(y), float(radius))


@njit(cache=True, nogil=True)
def _cell_of(v, v0, cell, n):
    k = int(math.floor((v - v0) / cell))
    return min(max(k, 0), n - 1)


@njit(cache=True, nogil=True)
def _query(points, order, start, x0, y0, cell, nx, ny, x, y, radius):
    cx = _cell_of(x, x0, cell, nx)
    cy = _cell_of(y, y0, cell, ny)
    out = []
    r2 = radius * radius
    for i in range(max(cx - 1, 0), min(cx + 2, nx)):
        for j in range(max(cy - 1, 0), min(cy + 2, ny)):
            c = i * ny + j
            for k in range(start[c], start[c + 1]):
                p = order[k]
                dx = points[p, 0] - x
                dy = points[p, 1] - y
                if dx * dx + dy * dy <= r2:
                    out.append(p)
    return np.array(sorted(out), dtype=np.int64)


@njit(cache=True, nogil=True)
def _block_density(users, tx, rx, birth, hx_order, hx_start, rx_order, rx_start,
                   x0, y0, cell, nx, ny, R_I, r_I):
    # Smallest birth density of any primary pair that denies each user an
    # opportunity; +inf when none does.
    n = users.shape[0]
    out = np.full(n, np.inf)
    R2 = R_I * R_I
    r2 = r_I * r_I
    for u in range(n):
        x = users[u, 0]
        y = users[u, 1]
        cx = _cell_of(x, x0, cell, nx)
        cy = _cell_of(y, y0, cell, ny)
        best = np.inf
        for i in range(max(cx - 1, 0), min(cx + 2, nx)):
            for j in range(max(cy - 1, 0), min(cy + 2, ny)):
                c = i * ny + j
                for k in range(hx_start[c], hx_start[c + 1]):
                    p = hx_order[k]
                    dx = tx[p, 0] - x
                    dy = tx[p, 1] - y
                    if dx * dx + dy * dy <= R2 and birth[p] < best:
                        best = birth[p]
                for k in range(rx_start[c], rx_start[c + 1]):
                    p = rx_order[k]
                    dx = rx[p, 0] - x
                    dy = rx[p, 1] - y
                    if dx * dx + dy * dy <= r2 and birth[p] < best:
                        best = birth[p]
        out[u] = best
    return out


def blocking_density(realization: Realization):
    """Per user, the lowest primary density at which the user loses its opportunity.

    A user sees an opportunity in the realization at primary density lambda
    iff its blocking density exceeds lambda.
    """
    params = realization.params
    users = realization.secondary
    if realization.n_primary == 0 or users.shape[0] == 0:
        return np.full(users.shape[0], np.inf)
    cell = max(params.R_I, params.r_I)
    w = realization.window
    bounds = (-w.padding, w.width + w.padding, -w.padding, w.height + w.padding)
    htx = SpatialHash.build(realization.tx, cell, bounds)
    hrx = SpatialHash.build(realization.rx, cell, bounds)
    return _block_density(users, realization.tx, realization.rx, realization.primary_birth,
                          htx.order, htx.start, hrx.order, hrx.start,
                          htx.x0, htx.y0, cell, htx.nx, htx.ny,
                          float(params.R_I), float(params.r_I))


def evaluate_opportunities(realization: Realization, params: RadioParams | None = None):
    """Boolean array: does each secondary user see a spectrum opportunity?"""
    if params is not None and params != realization.params:
        realization = Realization(params, realization.density, realization.window,
                                  realization.tx, realization.rx, realization.primary_birth,
                                  realization.secondary, realization.secondary_birth,
                                  realization.master_seed, realization.index)
    return np.isinf(blocking_density(realization))


# --------------------------------------------------------------------------
# graph

@njit(cache=True, nogil=True)
def _pairs(points, active, order, start, x0, y0, cell, nx, ny, radius, fill, out):
    # Two passes: fill=False counts, fill=True writes (u, v) with u < v.
    r2 = radius * radius
    m = 0
    for u in range(points.shape[0]):
        if not active[u]:
            continue
        x = points[u, 0]
        y = points[u, 1]
        cx = _cell_of(x, x0, cell, nx)
        cy = _cell_of(y, y0, cell, ny)
        for i in range(max(cx - 1, 0), min(cx + 2, nx)):
            for j in range(max(cy - 1, 0), min(cy + 2, ny)):
                c = i * ny + j
                for k in range(start[c], start[c + 1]):
                    v = order[k]
                    if v <= u or not active[v]:
                        continue
                    dx = points[v, 0] - x
                    dy = points[v, 1] - y
                    if dx * dx + dy * dy <= r2:
                        if fill:
                            out[m, 0] = u
                            out[m, 1] = v
                        m += 1
    return m


def close_pairs(points, radius, active=None):
    """All ``(u, v)``, ``u < v``, both active, at distance <= ``radius``; lexicographic order."""
    points = np.asarray(points, float).reshape(-1, 2)
    n = points.shape[0]
    if active is None:
        active = np.ones(n, dtype=bool)
    if n == 0:
        return np.empty((0, 2), dtype=np.int64)
    h = SpatialHash.build(points, radius)
    args = (points, np.asarray(active, bool), h.order, h.start, h.x0, h.y0, h.cell,
            h.nx, h.ny, float(radius))
    dummy = np.empty((0, 2), dtype=np.int64)
    m = _pairs(*args, False, dummy)
    out = np.empty((m, 2), dtype=np.int64)
    _pairs(*args, True, out)
    if m:
        out = out[np.lexsort((out[:, 1], out[:, 0]))]
    return out


@dataclass
class SecondaryGraph:
    """Undirected graph on the secondary users; ``edges`` rows are ``(u, v)`` with u < v."""

    n: int
    edges: np.ndarray

    @property
    def degree(self):
        deg = np.zeros(self.n, dtype=np.int64)
        if self.edges.size:
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def neighbors(self, u):
        e = self.edges
        return np.sort(np.concatenate([e[e[:, 0] == u, 1], e[e[:, 1] == u, 0]]))

    def has_edge(self, u, v):
        u, v = min(u, v), max(u, v)
        return bool(np.any((self.edges[:, 0] == u) & (self.edges[:, 1] == v)))

    def edges_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("u", "v"))
        writer.writerows(self.edges.tolist())
        return buf.getvalue()


def build_graph(realization: Realization, flags, params: RadioParams | None = None):
    """Edges between users that are within r_p and both see an opportunity."""
    params = params or realization.params
    flags = np.asarray(flags, bool)
    if flags.shape[0] != realization.n_secondary:
        raise ValueError("flags do not match the realization's secondary users")
    edges = close_pairs(realization.secondary, params.r_p, flags)
    return SecondaryGraph(realization.n_secondary, edges)


# --------------------------------------------------------------------------
# components

@njit(cache=True, nogil=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True, nogil=True)
def _union_all(n, edges):
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for k in range(edges.shape[0]):
        a = _find(parent, edges[k, 0])
        b = _find(parent, edges[k, 1])
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
    labels = np.empty(n, dtype=np.int64)
    ids = np.full(n, -1, dtype=np.int64)
    k = 0
    for i in range(n):
        r = _find(parent, i)
        if ids[r] < 0:
            ids[r] = k
            k += 1
        labels[i] = ids[r]
    return labels, k


@dataclass
class ComponentLabeling:
    """Component id per user (ids numbered by smallest member) and component sizes."""

    labels: np.ndarray
    sizes: np.ndarray

    @property
    def n_components(self):
        return self.sizes.size

    def members(self, label):
        return np.flatnonzero(self.labels == label)


def label_components(graph: SecondaryGraph) -> ComponentLabeling:
    labels, k = _union_all(graph.n, np.asarray(graph.edges, np.int64).reshape(-1, 2))
    sizes = np.bincount(labels, minlength=k).astype(np.int64)
    return ComponentLabeling(labels, sizes)


def _band_masks(points, window, margin):
    x = points[:, 0]
    y = points[:, 1]
    return (x <= margin, x >= window.width - margin,
            y <= margin, y >= window.height - margin)


def detect_crossings(labeling: ComponentLabeling, realization: Realization,
                     params: RadioParams | None = None, margin=None):
    """``(has_LR, has_TB)``: does one component touch both opposite boundary bands?

    Band width ``margin`` defaults to r_p.
    """
    params = params or realization.params
    margin = params.r_p if margin is None else margin
    if not margin >= 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    k = labeling.n_components
    if k == 0:
        return False, False
    left, right, bottom, top = _band_masks(realization.secondary, realization.window, margin)
    touches = np.zeros((4, k), dtype=bool)
    for row, mask in enumerate((left, right, bottom, top)):
        touches[row, labeling.labels[mask]] = True
    return bool(np.any(touches[0] & touches[1])), bool(np.any(touches[2] & touches[3]))


def empirical_conditional_degree(graph: SecondaryGraph, flags, mask=None):
    """Mean degree over users that see an opportunity (optionally only where ``mask``)."""
    flags = np.asarray(flags, bool)
    sel = flags if mask is None else flags & np.asarray(mask, bool)
    if not sel.any():
        raise EmptySampleError("no user sees an opportunity")
    return float(graph.degree[sel].mean())


# --------------------------------------------------------------------------
# exact crossing threshold on a nested family of realizations

@njit(cache=True, nogil=True)
def _maximin_crossing(n, edges, weight, start_mask, end_mask):
    # Add edges in decreasing weight; return the weight at which a component
    # first joins the two bands (0 if never).
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    has_s = start_mask.copy()
    has_e = end_mask.copy()
    order = np.argsort(-weight, kind="mergesort")
    for idx in range(order.shape[0]):
        k = order[idx]
        a = _find(parent, edges[k, 0])
        b = _find(parent, edges[k, 1])
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
        has_s[a] = has_s[a] or has_s[b]
        has_e[a] = has_e[a] or has_e[b]
        if has_s[a] and has_e[a]:
            return weight[k]
    return 0.0


def crossing_threshold(realization: Realization, margin=None, direction="LR"):
    """Primary density at which this realization's crossing disappears.

    On the nested family ``realization.restrict(lambda_PT=x)`` the crossing
    exists iff ``x < threshold``. Returns 0 when there is no crossing even
    without primaries, and ``inf`` when no primary drawn so far breaks it
    (the caller must then sample a denser primary prefix).
    """
    params = realization.params
    margin = params.r_p if margin is None else margin
    w = realization.window
    if min(w.width, w.height) <= 2 * margin:
        raise ValueError("window must be wider than two boundary bands")
    users = realization.secondary
    n = users.shape[0]
    if n == 0:
        return 0.0
    block = blocking_density(realization)
    edges = close_pairs(users, params.r_p)
    weight = np.minimum(block[edges[:, 0]], block[edges[:, 1]]) if edges.size else np.empty(0)
    left, right, bottom, top = _band_masks(users, w, margin)
    if direction == "LR":
        s, e = left, right
    elif direction == "TB":
        s, e = bottom, top
    else:
        raise ValueError(f"direction must be 'LR' or 'TB', got {direction!r}")
    return float(_maximin_crossing(n, edges, weight, s, e))


def takeoff_threshold(realization: Realization, margin=None, direction="LR"):
    """Secondary density at which this realization's crossing first appears.

    Primaries are held fixed at the realization's lambda_PT. On the nested
    family ``realization.restrict(lambda_S=x)`` the crossing exists iff
    ``x >= threshold``; ``inf`` when even the full realization has none.
    """
    params = realization.params
    margin = params.r_p if margin is None else margin
    w = realization.window
    if min(w.width, w.height) <= 2 * margin:
        raise ValueError("window must be wider than two boundary bands")
    users = realization.secondary
    n = users.shape[0]
    if n == 0:
        return math.inf
    flags = evaluate_opportunities(realization)
    edges = close_pairs(users, params.r_p, flags)
    if edges.shape[0] == 0:
        return math.inf
    birth = realization.secondary_birth
    weight = -np.maximum(birth[edges[:, 0]], birth[edges[:, 1]])
    left, right, bottom, top = _band_masks(users, w, margin)
    s, e = (left, right) if direction == "LR" else (bottom, top)
    if direction not in ("LR", "TB"):
        raise ValueError(f"direction must be 'LR' or 'TB', got {direction!r}")
    out = _maximin_crossing(n, edges, weight, s, e)
    return math.inf if out == 0.0 else float(-out)
