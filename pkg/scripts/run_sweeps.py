"""Run both standard sweeps (beta = eps^2 and beta = eps^3) and check the stored artifacts.

    python3 scripts/run_sweeps.py --out out/sweeps
"""

import argparse
from pathlib import Path

from shortpulse.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(out: Path, jobs: int) -> int:
    status = 0
    for name in ("sweep_beta_eps2", "sweep_beta_eps3"):
        target = out / name
        status |= main(["sweep", "--config", str(CONFIGS / f"{name}.json"), "--out", str(target),
                        "--jobs", str(jobs), "--seedless"])
        status |= main(["check", str(target)])
    return status


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/sweeps", type=Path)
    ap.add_argument("--jobs", default=1, type=int)
    args = ap.parse_args()
    raise SystemExit(run(args.out, args.jobs))
