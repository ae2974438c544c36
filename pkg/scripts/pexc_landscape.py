"""Joint-excitation landscape for a fixed/tuned emitter pair.

Writes the (gamma ratio, normalized detuning) grid and prints the tuning
trajectory of one catalogue pair through it.
"""
import argparse

import numpy as np

from starkplan import io as sio
from starkplan.cli import PEXC_COLUMNS, pexc_map_rows
from starkplan.emitters import CATALOG
from starkplan.interference import tuning_trajectory


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fixed", default="A1")
    ap.add_argument("--tuned", default="B1")
    ap.add_argument("--points", type=int, default=12)
    ap.add_argument("--out", help="write the grid CSV here")
    args = ap.parse_args()
    fixed, tuned = CATALOG[args.fixed], CATALOG[args.tuned]
    if args.out:
        sio.write_csv(args.out, PEXC_COLUMNS, pexc_map_rows(fixed.gamma0))
    pts = tuning_trajectory(fixed, tuned, np.linspace(tuned.v_min, 0.0, args.points))
    print(f"{'V':>8}{'ratio':>8}{'delta~':>9}{'p_exc':>11}  quenched")
    for p in pts:
        print(f"{p.voltage:8.2f}{p.gamma_ratio:8.3f}{p.delta_tilde:9.3f}{p.p_exc:11.3g}  {p.quenched}")
    best = max(pts, key=lambda p: p.p_exc)
    print(f"gain over 0 V: {best.p_exc / pts[-1].p_exc:.3g} at {best.voltage:.1f} V")


if __name__ == "__main__":
    main()
