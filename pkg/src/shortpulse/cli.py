"""Command line entry point: run, sweep, compare, check, mms."""

from __future__ import annotations

import argparse
import os
import random
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, checks, io
from . import grid as g
from .config import MMS_DEFAULTS, ConfigError, load_config, load_run_config, sweep_config
from .dispersive import DispersiveParams, integrate, integrate_manufactured, observed_order
from .finite_volume import fv_integrate
from .harness import compare, run_sweep

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_ABORTED = 3


class RngUsed(RuntimeError):
    """Raised under --seedless when anything touches a random number generator."""


def forbid_rng() -> None:
    """Replace the public RNG entry points of numpy and the stdlib with raisers."""

    def raiser(name):
        def _fail(*args, **kwargs):
            raise RngUsed(f"--seedless: {name} was called")
        return _fail

    for name in dir(np.random):
        if not name.startswith("_") and callable(getattr(np.random, name)):
            setattr(np.random, name, raiser(f"numpy.random.{name}"))
    for name in ("random", "seed", "randint", "randrange", "choice", "choices", "shuffle",
                 "sample", "uniform", "gauss", "normalvariate", "getrandbits", "Random"):
        setattr(random, name, raiser(f"random.{name}"))


class Staging:
    """Write into a hidden sibling directory and move it into place only on success."""

    def __init__(self, out: Path):
        self.out = Path(out)

    def __enter__(self) -> Path:
        if self.out.exists() and (not self.out.is_dir() or any(self.out.iterdir())):
            raise FileExistsError(f"{self.out}: output directory exists and is not empty")
        self.out.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=f".{self.out.name}.partial-", dir=self.out.parent))
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            shutil.rmtree(self.tmp, ignore_errors=True)
            return False
        if self.out.exists():
            self.out.rmdir()
        os.replace(self.tmp, self.out)
        return False


def _echo(msg: str = "") -> None:
    print(msg, flush=True)


# ------------------------------------------------------------------- commands

def cmd_run(args) -> int:
    data, (u0, params) = load_run_config(args.config)
    with Staging(args.out) as tmp:
        if data["solver"] == "dispersive":
            traj = integrate(u0, params)
        else:
            traj = fv_integrate(u0, params)
        io.save_trajectory(traj, tmp)
        io.write_json(tmp / "config.json", data)
    _echo(f"{data['solver']} run {traj.status}: t_end = {traj.times[-1]:g}, "
          f"{len(traj.snapshots)} snapshots -> {args.out}")
    if traj.failed:
        _echo(f"aborted: {traj.message}")
        return EXIT_ABORTED
    return EXIT_OK


def _key_name(entry: dict) -> str:
    w = entry["window"]
    return f"t{entry['t']:g}_x{w[0]:g}_{w[1]:g}_p{entry['p']:g}"


def cmd_sweep(args) -> int:
    data = load_config(args.config, "sweep")
    config = sweep_config(data)
    with Staging(args.out) as tmp:
        report, runs, reference = run_sweep(config, jobs=args.jobs)
        io.save_trajectory(reference, tmp / "reference")
        for i, (params, traj) in enumerate(runs):
            io.save_trajectory(traj, tmp / "runs" / f"{i:02d}")
        io.write_json(tmp / "report.json", {**report.to_dict(), "seedless": bool(args.seedless)})
        if report.scaling is not None:
            io.write_json(tmp / "scaling.json", report.scaling)
        io.write_json(tmp / "entropy.json", report.entropy)
        io.write_json(tmp / "config.json", data)
        eps = config.epsilons
        dat = tmp / "series"
        dat.mkdir()
        for entry in report.distances:
            io.write_dat(dat / f"distance_{_key_name(entry)}.dat", eps, entry["values"],
                         ("epsilon", "distance"))
        io.write_dat(dat / "entropy_violation.dat", [p.epsilon for p, t in runs if not t.failed],
                     report.entropy["dispersive_violation"], ("epsilon", "violation"))
        io.write_dat(dat / "eps_sup_dxP.dat", [p.epsilon for p, t in runs if not t.failed],
                     report.p_convergence["sequences"]["eps_sup_dxp"], ("epsilon", "eps_sup_dxP"))
    _print_verdicts(report)
    _echo(f"artifacts -> {args.out}")
    return EXIT_OK


def _print_verdicts(report) -> None:
    v = report.verdicts
    _echo(f"regime {report.regime}")
    for k in v["per_key"]:
        _echo(f"  t={k['t']:g} window={k['window']} p={k['p']:g}: "
              f"(a) {'ok' if k['a_monotone'] else 'no'}  (b) {'ok' if k['b_halved'] else 'no'}")
    if "c_entropy_monotone" in v:
        _echo(f"  (c) entropy violation non-increasing: {v['c_entropy_monotone']}")
    _echo(f"  all runs completed: {v['all_runs_completed']}")


def cmd_compare(args) -> int:
    data = load_config(args.config, "compare")
    base = Path(args.config).resolve().parent
    run_a = io.load_trajectory(base / data["run_a"])
    run_b = io.load_trajectory(base / data["run_b"])
    windows = data.get("windows", [[run_a.grid.x_left, run_a.grid.x_right]])
    rows = []
    for t in data["times"]:
        for w in windows:
            for p in data.get("p_norms", [1.0, 2.0, 4.0]):
                d = compare(run_a, run_b, w, p, t)
                rows.append({"t": t, "window": w, "p": p, "distance": d})
                _echo(f"t={t:g} window={w} p={p:g}: {d:.6e}")
    with Staging(args.out) as tmp:
        io.write_json(tmp / "compare.json", {"schema_version": 1, "config": data, "distances": rows})
    return EXIT_OK


def cmd_check(args) -> int:
    target = Path(args.path or args.out or ".")
    results = checks.check_path(target)
    for r in results:
        _echo(r.line())
    failed = sum(not r.passed for r in results)
    _echo(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAILED


def _mms_task(task):
    params, grid = task
    return integrate_manufactured(params, grid)[1]


def cmd_mms(args) -> int:
    data = load_config(args.config, "mms") if args.config else {"schema_version": 1}
    cfg = {**MMS_DEFAULTS, **data}
    gd = {**MMS_DEFAULTS["grid"], **data.get("grid", {})}

    def params(dt):
        return DispersiveParams(cfg["epsilon"], cfg["beta"], cfg["gamma"], dt, cfg["t_final"],
                                snapshot_interval=cfg["t_final"], diagnostics_interval=cfg["t_final"])

    try:
        grid = g.make_grid(int(gd["n_points"]), gd["length"], gd["x_left"])
        tasks = [(params(dt), grid) for dt in cfg["dts"]]
        grids = [g.make_grid(int(n), gd["length"], gd["x_left"]) for n in cfg["spatial_n_points"]]
        tasks += [(params(cfg["spatial_dt"]), gr) for gr in grids]
    except ValueError as exc:
        raise ConfigError(f"{args.config}: {exc}") from None
    with Staging(args.out) as tmp:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                tables = list(pool.map(_mms_task, tasks))
        else:
            tables = [_mms_task(t) for t in tasks]
        n_dt = len(cfg["dts"])
        t_err = [tb["final_sup_error"] for tb in tables[:n_dt]]
        x_err = [tb["final_sup_error"] for tb in tables[n_dt:]]
        order = observed_order(cfg["dts"], t_err)
        result = {
            "schema_version": 1,
            "config": cfg,
            "temporal": {"dts": cfg["dts"], "sup_errors": t_err, "observed_order": order},
            "spatial": {"n_points": cfg["spatial_n_points"], "dt": cfg["spatial_dt"],
                        "sup_errors": x_err},
        }
        io.write_json(tmp / "mms.json", result)
        io.write_dat(tmp / "temporal_error.dat", cfg["dts"], t_err, ("dt", "sup_error"))
        io.write_dat(tmp / "spatial_error.dat", cfg["spatial_n_points"], x_err, ("n_points", "sup_error"))
    _echo(f"temporal order {order:.3f} from errors {', '.join(f'{e:.3e}' for e in t_err)}")
    _echo(f"spatial errors {', '.join(f'{e:.3e}' for e in x_err)}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "compare": cmd_compare, "check": cmd_check,
            "mms": cmd_mms}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shortpulse", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--jobs", metavar="N", type=int, default=1, help="max concurrent runs")
    common.add_argument("--seedless", action="store_true", help="fail if any RNG is used")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="single integration, either solver")
    sub.add_parser("sweep", parents=[common], help="(eps, beta) sweep against the reference")
    sub.add_parser("compare", parents=[common], help="L^p distances between two stored runs")
    p = sub.add_parser("check", parents=[common], help="invariant suite on stored artifacts")
    p.add_argument("path", nargs="?", help="run or sweep directory (defaults to --out)")
    sub.add_parser("mms", parents=[common], help="manufactured-solution verification")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    if args.command in ("run", "sweep", "compare") and not args.config:
        parser.error(f"{args.command} needs --config")
    if args.command != "check" and not args.out:
        parser.error(f"{args.command} needs --out")
    if args.seedless:
        forbid_rng()
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileExistsError, io.MissingArtifact, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
