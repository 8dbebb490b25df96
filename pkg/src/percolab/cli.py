"""Command-line front end.

    percolab <command> --config FILE [--seed N] [--out DIR]

Commands: simulate, sweep, degree, power-design, validate-geometry. Every
run writes its CSV/JSON outputs plus ``manifest.json`` into ``--out``; a
manifest may be passed back as ``--config`` to replay the run. Exit codes:
0 success, 1 runtime or numeric failure, 2 config error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
import time

import mpmath
import numba
import numpy as np
import scipy

import percolab
from percolab import bounds
from percolab.config import ConfigError, load_config
from percolab.curves import curves_to_csv, format_float
from percolab.percolation import analyze, degree_estimate, run_realizations, sweep_region
from percolab.pointprocess import sample_realization
from percolab.units import to_per_km2
from percolab.validation import validate_geometry

COMMANDS = ("simulate", "sweep", "degree", "power-design", "validate-geometry")


def _csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v
                         for v in row])
    return buf.getvalue()


def _json(obj):
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _threads():
    env = os.environ.get("PERCOLAB_THREADS")
    if env is None:
        return None
    try:
        n = int(env)
    except ValueError:
        raise ConfigError(f"PERCOLAB_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise ConfigError(f"PERCOLAB_THREADS must be >= 1, got {n}")
    return n


# --------------------------------------------------------------------------
# commands: each returns {filename: text}

def cmd_simulate(cfg, threads=None):
    """Crossing/component summary over all realizations plus one exported snapshot."""
    exp = cfg.experiment(threads=threads)
    density = cfg.density()
    idx = cfg["export_index"]
    if not 0 <= idx < exp.realizations:
        raise ConfigError(f"export_index {idx} outside [0, {exp.realizations})", path=cfg.path)
    stats = run_realizations(exp, density)
    snap = analyze(sample_realization(exp.params, density, exp.window, exp.master_seed, idx),
                   exp.band)
    r = snap.realization
    node_rows = []
    for k in range(r.n_primary):
        node_rows.append(("ptx", float(r.tx[k, 0]), float(r.tx[k, 1]), k, "", ""))
        node_rows.append(("prx", float(r.rx[k, 0]), float(r.rx[k, 1]), k, "", ""))
    for k in range(r.n_secondary):
        node_rows.append(("su", float(r.secondary[k, 0]), float(r.secondary[k, 1]), -1,
                          int(snap.flags[k]), int(snap.labeling.labels[k])))
    edges = snap.graph.edges
    n = len(stats)
    with_users = [s for s in stats if s.n_flagged]
    summary = {
        "density_per_km2": {"lambda_S": to_per_km2(density.lambda_S),
                            "lambda_PT": to_per_km2(density.lambda_PT)},
        "realizations": n,
        "crossing_probability_LR": sum(s.has_LR for s in stats) / n,
        "crossing_probability_TB": sum(s.has_TB for s in stats) / n,
        "mean_largest_fraction": (sum(s.largest / s.n_flagged for s in with_users) / n),
        "mean_second_fraction": (sum(s.second / s.n_flagged for s in with_users) / n),
        "opportunity_fraction": (sum(s.n_flagged for s in stats)
                                 / max(1, sum(s.n_users for s in stats))),
        "empirical_degree": (sum(s.interior_degree_sum for s in stats)
                             / max(1, sum(s.interior_flagged for s in stats))),
        "per_realization": [
            {"index": s.index, "has_LR": s.has_LR, "has_TB": s.has_TB, "users": s.n_users,
             "flagged": s.n_flagged, "largest": s.largest, "second": s.second}
            for s in stats],
        "exported_index": idx,
    }
    return {
        "nodes.csv": _csv(("role", "x", "y", "pair_id", "opportunity", "component"), node_rows),
        "edges.csv": _csv(("u", "v"), (tuple(int(v) for v in e) for e in edges)),
        "summary.json": _json(summary),
    }


def cmd_sweep(cfg, threads=None):
    """Empirical boundary plus the analytical curves on one lambda_S grid."""
    exp = cfg.experiment(threads=threads)
    grid = cfg.lambda_S_grid()
    if not grid:
        raise ConfigError("sweep needs lambda_S_grid", path=cfg.path)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("lambda_S_grid must be strictly increasing", path=cfg.path)
    constants = bounds.PercolationConstants(cfg["lambda_c_unit"], None)
    curves = [sweep_region(exp, grid)]
    failures = []
    if cfg["include_bounds"]:
        for name, build in (("outer-bound", lambda: bounds.outer_bound_curve(exp.params, grid)),
                            ("inner-bound", lambda: bounds.inner_bound_curve(exp.params, grid)),
                            ("t22", lambda: bounds.t22_curve(exp.params, grid, constants))):
            try:
                curves.append(build())
            except (ArithmeticError, ValueError) as exc:
                failures.append((name, "", str(exc)))
    absent = [(c.method, to_per_km2(lam), reason) for c in curves for lam, reason in c.absent]
    return {
        "curves.csv": curves_to_csv(curves),
        "absent.csv": _csv(("method", "lambda_S_per_km2", "reason"), absent + failures),
    }


def cmd_degree(cfg, threads=None):
    """mu against r_p with r_I = r_p / r_I_ratio: quadrature next to simulation."""
    grid = cfg["r_p_grid"]
    if not grid:
        raise ConfigError("degree needs r_p_grid", path=cfg.path)
    cfg.require("R_p", "R_I")
    ratio = cfg["r_I_ratio"]
    if not ratio > 0:
        raise ConfigError("r_I_ratio must be positive", path=cfg.path)
    from percolab.pointprocess import RadioParams
    density = cfg.density()
    rows = []
    for r_p in grid:
        try:
            params = RadioParams(cfg["R_p"], cfg["R_I"], r_p, r_p / ratio)
        except ValueError as exc:
            raise ConfigError(str(exc), path=cfg.path) from None
        mu_q = bounds.cond_avg_degree(params, density)
        try:
            est = degree_estimate(cfg.experiment(params, threads), density)
            mu_e, se = est.mean, est.stderr
        except ValueError:
            mu_e, se = float("nan"), float("nan")
        rows.append((float(r_p), float(mu_q), float(mu_e), float(se)))
    return {"degree.csv": _csv(("r_p", "mu_quadrature", "mu_empirical", "stderr"), rows)}


def cmd_power_design(cfg, threads=None):
    """Bound against r_I with r_p = beta r_I, and where it peaks."""
    cfg.require("R_I", "beta")
    R_I, beta = cfg["R_I"], cfg["beta"]
    if not 0 < beta < 1:
        raise ConfigError(f"beta must lie in (0, 1), got {beta}", path=cfg.path)
    lo = cfg["r_I_min"] if cfg["r_I_min"] is not None else R_I / 6
    hi = cfg["r_I_max"] if cfg["r_I_max"] is not None else 3 * R_I
    if not 0 < lo < hi or cfg["n_points"] < 2:
        raise ConfigError("need 0 < r_I_min < r_I_max and n_points >= 2", path=cfg.path)
    constants = bounds.PercolationConstants(cfg["lambda_c_unit"], None)
    r_I = np.linspace(lo, hi, cfg["n_points"])
    vals = bounds.power_design_bound(r_I, R_I, beta, constants)
    k = int(np.argmax(vals))
    report = {"argmax_r_I": float(r_I[k]), "peak_per_km2": to_per_km2(float(vals[k])),
              "R_I": R_I, "beta": beta}
    rows = ((float(a), to_per_km2(float(b))) for a, b in zip(r_I, vals))
    return {"power_design.csv": _csv(("r_I", "bound_per_km2"), rows),
            "power_design.json": _json(report)}


def cmd_validate_geometry(cfg, threads=None):
    rows = validate_geometry(cfg["n_configs"], cfg["mc_samples"], cfg["seed"])
    out = _csv(("case", "kind", "near_tangent", "analytic", "monte_carlo", "stderr", "z"),
               ((r.case, r.kind, int(r.near_tangent), float(r.analytic), float(r.monte_carlo),
                 float(r.stderr), float(r.z)) for r in rows))
    worst = max(r.z for r in rows)
    return {"geometry_validation.csv": out,
            "geometry_validation.json": _json({"max_z": float(worst),
                                               "all_within_3se": bool(worst <= 3)})}


HANDLERS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "degree": cmd_degree,
            "power-design": cmd_power_design, "validate-geometry": cmd_validate_geometry}


# --------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="percolab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=percolab.__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HANDLERS[name].__doc__)
        p.add_argument("--config", required=True, help="key = value file or a run manifest")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        p.add_argument("--out", default=".", help="output directory")
    return parser


def _versions():
    return {"percolab": percolab.__version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__,
            "mpmath": mpmath.__version__}


def run(command, cfg, out_dir, threads=None):
    """Execute ``command`` and write its outputs plus the manifest; returns the manifest."""
    start = time.perf_counter()
    files = HANDLERS[command](cfg, threads)
    os.makedirs(out_dir, exist_ok=True)
    outputs = []
    for name in sorted(files):
        data = files[name].encode()
        with open(os.path.join(out_dir, name), "wb") as fh:
            fh.write(data)
        outputs.append({"file": name, "sha256": hashlib.sha256(data).hexdigest()})
    manifest = {"command": command, "config": cfg.resolved(), "seed": cfg["seed"],
                "versions": _versions(), "wall_clock_s": time.perf_counter() - start,
                "outputs": outputs}
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(_json(manifest))
    return manifest


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg, recorded = load_config(args.config)
        if recorded is not None and recorded != args.command:
            raise ConfigError(f"manifest was recorded for {recorded!r}, not {args.command!r}",
                              path=args.config)
        if args.seed is not None:
            cfg.values["seed"] = args.seed
        threads = _threads()
        run(args.command, cfg, args.out, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
