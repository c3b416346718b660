"""Run all three planners on the bundled scenarios and print the metric tables.

    python3 scripts/run_benchmark.py [--out bench] [--scenario standard --scenario dense] [--seed 0]

Writes per-scenario output directories (trajectories, metrics.csv and the
two SVG figures) under ``--out``.  With defaults each scenario takes
several minutes on one core, almost all of it PINN training.
"""

import argparse
import sys
from pathlib import Path

from windplan import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="bench")
    ap.add_argument("--scenario", action="append", dest="scenarios")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides")
    args = ap.parse_args()
    status = 0
    for name in args.scenarios or ["standard", "dense"]:
        out = Path(args.out) / name
        common = ["--scenario", name, "--seed", str(args.seed), "--out", str(out)]
        for kv in args.overrides:
            common += ["--set", kv]
        print(f"\n== {name} ==")
        rc = cli.main(["compare", *common])
        if rc == 0:
            rc = cli.main(["plot", *common])
        if rc != 0:
            print(f"{name}: failed with exit code {rc}", file=sys.stderr)
            status = rc
    return status


if __name__ == "__main__":
    sys.exit(main())
