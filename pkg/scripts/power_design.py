"""Tolerable primary density bound against r_I when r_p = beta r_I.

    python3 scripts/power_design.py [--R-I 120] [--beta 0.625]
"""

import argparse

import numpy as np

from percolab import bounds
from percolab.units import to_per_km2


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--R-I", dest="R_I", type=float, default=120.0)
    ap.add_argument("--beta", type=float, default=0.625)
    ap.add_argument("--points", type=int, default=200)
    args = ap.parse_args()

    # spacing R_I/60 from R_I/6 puts R_I itself on grid point 50
    step = args.R_I / 60
    r_I = np.linspace(args.R_I / 6, args.R_I / 6 + (args.points - 1) * step, args.points)
    vals = bounds.power_design_bound(r_I, args.R_I, args.beta)
    for r, v in zip(r_I[::max(1, args.points // 20)], vals[::max(1, args.points // 20)]):
        print(f"{r:8.1f} {to_per_km2(v):9.4f} " + "#" * int(2 * to_per_km2(v)))
    k = int(np.argmax(vals))
    print(f"peak {to_per_km2(vals[k]):.4f} km^-2 at r_I = {r_I[k]:.2f} m "
          f"(R_I = {args.R_I:g} m, grid spacing {r_I[1] - r_I[0]:.2f} m)")


if __name__ == "__main__":
    main()
