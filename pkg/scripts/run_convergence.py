#!/usr/bin/env python3
"""Run the manufactured-solution refinement ladder and print the rate table.

Equivalent to `autochemo converge`; kept as a script for notebook-free
cluster use.  Set AUTOCHEMO_THREADS to run levels in parallel.
"""

import argparse

from autochemo.experiments import run_convergence_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", default="8,16,32,64")
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--out", help="directory for rate CSVs")
    args = ap.parse_args()

    levels = [int(part) for part in args.levels.split(",")]
    result = run_convergence_study(levels, T=args.T)
    print(result.table())
    if args.out:
        for path in result.write_csv(args.out):
            print(f"wrote {path}")


if __name__ == "__main__":
    main()
