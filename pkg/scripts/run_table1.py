"""Cost-slope comparison of all estimators on one problem; writes a CSV and prints fitted slopes.

    python3 scripts/run_table1.py --problem gauss-toy --seeds 20 --out results/gauss.csv
"""

import argparse
import os
from pathlib import Path

from qnest.bench_cli import run_scaling_experiment
from qnest.problem_model import PROBLEMS
from qnest.quantum_mean_oracle import OracleMode

WINDOWS = {"nmc": (2.6, 4.4), "cmlmc": (1.6, 2.4), "qamlmc": (1.6, 2.4), "qnest": (0.7, 1.4), "qnest08": (0.7, 1.4)}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--problem", default="gauss-toy", choices=PROBLEMS)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--finest", type=int, default=7, help="finest eps is 2^-finest")
    ap.add_argument("--out", default="results/table1.csv")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    seeds = list(range(args.seeds))
    grid = [2.0**-k for k in range(3, args.finest + 1)]
    coarse = [2.0**-k for k in (3, 3.5, 4, 4.5, 5)]
    mode = OracleMode.idealized()
    stem = Path(args.out)
    main_rep = run_scaling_experiment(args.problem, ["cmlmc", "qamlmc", "qnest", "qnest08"], grid, seeds, mode,
                                      stem, workers=args.workers)
    nmc_rep = run_scaling_experiment(args.problem, ["nmc"], coarse, seeds, mode,
                                     stem.with_name(stem.stem + "_nmc.csv"), workers=args.workers)
    print(f"{'method':<9} {'slope':>7}  window")
    for rep in (nmc_rep, main_rep):
        for m, fit in rep.fits.items():
            lo, hi = WINDOWS[m]
            s = float("nan") if fit is None else fit.slope
            flag = "ok" if lo <= s <= hi else "outside"
            print(f"{m:<9} {s:7.3f}  [{lo}, {hi}] {flag}")
    print()
    print(main_rep.summary())


if __name__ == "__main__":
    main()
