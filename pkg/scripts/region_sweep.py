"""Connectivity region: empirical boundary next to the analytical curves.

    python3 scripts/region_sweep.py [--config configs/region_sweep.cfg] [--out curves.csv]
"""

import argparse

from percolab import bounds
from percolab.config import load_config
from percolab.curves import curves_to_csv
from percolab.percolation import sweep_region
from percolab.units import to_per_km2


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--config", default="configs/region_sweep.cfg")
    ap.add_argument("--out", default=None, help="optional CSV with every curve")
    args = ap.parse_args()

    cfg, _ = load_config(args.config)
    exp, grid = cfg.experiment(), cfg.lambda_S_grid()
    emp = sweep_region(exp, grid)
    outer = bounds.outer_bound_curve(exp.params, grid)
    t22 = bounds.t22_upper_bound(exp.params)
    print(f"{'lambda_S':>9} {'empirical':>10} {'ci_low':>8} {'ci_high':>8} {'outer':>9}")
    for lam, star, lo, hi in zip(emp.lambda_S, emp.lambda_PT_star, emp.ci_low, emp.ci_high):
        up = outer.at(lam)
        print(f"{to_per_km2(lam):9.0f} {to_per_km2(star):10.3f} {to_per_km2(lo):8.3f} "
              f"{to_per_km2(hi):8.3f} {to_per_km2(up) if up is not None else float('nan'):9.3f}")
    for lam, reason in emp.absent:
        print(f"{to_per_km2(lam):9.0f}  absent: {reason}")
    print(f"critical-density upper bound: {to_per_km2(t22):.3f} km^-2")
    if args.out:
        curves = [emp, outer, bounds.inner_bound_curve(exp.params, grid),
                  bounds.t22_curve(exp.params, grid)]
        with open(args.out, "w") as fh:
            fh.write(curves_to_csv(curves))


if __name__ == "__main__":
    main()
