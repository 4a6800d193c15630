#!/usr/bin/env python3
"""Run one pattern-formation preset and dump snapshots at the figure times.

Thin wrapper over the CLI so a queued batch job needs no config file:

    python3 scripts/run_scenario.py case1 --out results_case1
    python3 scripts/run_scenario.py case3 --seed 5 --format both
"""

import argparse
import sys

from autochemo.cli import main as cli_main
from autochemo.experiments import PRESETS


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("preset", choices=sorted(PRESETS))
    ap.add_argument("--out")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--format", choices=("csv", "vtk", "both"))
    ap.add_argument("--snapshot-every", type=int)
    args = ap.parse_args()

    argv = ["simulate", "--preset", args.preset]
    for flag in ("out", "seed", "format", "snapshot_every"):
        value = getattr(args, flag)
        if value is not None:
            argv += [f"--{flag.replace('_', '-')}", str(value)]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
