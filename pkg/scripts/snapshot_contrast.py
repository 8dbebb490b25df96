"""Crossing frequency and component sizes at the two snapshot primary densities.

    python3 scripts/snapshot_contrast.py [--realizations 200] [--side 2000]

Also prints the exact per-realization boundary so the snapshot densities can
be placed relative to it.
"""

import argparse

from percolab.percolation import (ExperimentConfig, boundary_at, crossing_probability,
                                  giant_component_stats, probability_above)
from percolab.pointprocess import DensityPair, RadioParams
from percolab.units import from_per_km2, to_per_km2


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--realizations", type=int, default=200)
    ap.add_argument("--side", type=float, default=2000.0)
    ap.add_argument("--seed", type=int, default=4)
    ap.add_argument("--lambda-s", type=float, default=650.0, help="km^-2")
    args = ap.parse_args()

    params = RadioParams(50.0, 80.0, 50.0, 80.0)
    exp = ExperimentConfig.square(params, args.side, realizations=args.realizations,
                                  master_seed=args.seed)
    print(f"{'lambda_PT':>10} {'P(LR)':>7} {'largest':>8} {'second':>7}")
    for lam_pt in (10.0, 20.0):
        d = DensityPair.per_km2(args.lambda_s, lam_pt)
        p = crossing_probability(exp, d)
        largest, second = giant_component_stats(exp, d)
        print(f"{lam_pt:10.1f} {p.estimate:7.3f} {largest:8.3f} {second:7.3f}")
    pt = boundary_at(exp, from_per_km2(args.lambda_s))
    print(f"boundary lambda*_PT = {to_per_km2(pt.lambda_PT_star):.3f} km^-2 "
          f"[{to_per_km2(pt.ci_low):.3f}, {to_per_km2(pt.ci_high):.3f}]")
    for lam_pt in (5.0, 7.5):
        print(f"P(LR) at {lam_pt} km^-2 = "
              f"{probability_above(pt.thresholds, from_per_km2(lam_pt)):.3f}")


if __name__ == "__main__":
    main()
