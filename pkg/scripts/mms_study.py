"""Manufactured-solution study: temporal order over a dt ladder and the spatial error floor.

Prints a two-column table per study; pass --dts to extend the ladder.
"""

import argparse

from shortpulse import grid as g
from shortpulse.config import MMS_DEFAULTS
from shortpulse.dispersive import DispersiveParams, integrate_manufactured, observed_order


def sup_error(n: int, dt: float, t_final: float) -> float:
    gd = MMS_DEFAULTS["grid"]
    grid = g.make_grid(n, gd["length"], gd["x_left"])
    params = DispersiveParams(MMS_DEFAULTS["epsilon"], MMS_DEFAULTS["beta"], MMS_DEFAULTS["gamma"],
                              dt, t_final, snapshot_interval=t_final, diagnostics_interval=t_final)
    return integrate_manufactured(params, grid)[1]["final_sup_error"]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dts", type=float, nargs="+", default=MMS_DEFAULTS["dts"])
    ap.add_argument("--n-points", type=int, nargs="+", default=MMS_DEFAULTS["spatial_n_points"])
    ap.add_argument("--t-final", type=float, default=MMS_DEFAULTS["t_final"])
    args = ap.parse_args()

    n0 = MMS_DEFAULTS["grid"]["n_points"]
    errs = [sup_error(n0, dt, args.t_final) for dt in args.dts]
    print(f"# dt sup_error (N={n0})")
    for dt, e in zip(args.dts, errs):
        print(f"{dt:.3e} {e:.6e}")
    print(f"# observed order {observed_order(args.dts, errs):.3f}")
    print(f"# n_points sup_error (dt={MMS_DEFAULTS['spatial_dt']})")
    for n in args.n_points:
        print(f"{n} {sup_error(n, MMS_DEFAULTS['spatial_dt'], args.t_final):.6e}")


if __name__ == "__main__":
    main()
