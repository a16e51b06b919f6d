"""Scaling benchmark: run estimators over eps grids and seeds, write CSV records, fit cost slopes."""

from __future__ import annotations

import argparse
import csv
import io
import math
import struct
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .classical_estimators import calibrate, classical_mlmc_estimate, nested_mc_estimate, nested_mc_plan
from .cost_ledger import CSV_COLUMNS, CostLedger
from .problem_model import PROBLEMS, get_problem
from .q_nestexpect import q_nest_expect, q_nest_expect_08, qa_mlmc_estimate
from .quantum_mean_oracle import OracleMode

METHODS = ("nmc", "cmlmc", "qamlmc", "qnest", "qnest08")
QUANTUM_METHODS = frozenset({"qamlmc", "qnest", "qnest08"})
NMC_MIN_EPS = 2.0**-5
HEADER = ("method", "problem", "eps", "seed", "value", "abs_error") + CSV_COLUMNS + ("oracle_mode",)


@dataclass(frozen=True)
class ScalingRecord:
    method: str
    problem: str
    eps: float
    seed: int
    value: float
    abs_error: Optional[float]
    ledger: CostLedger
    oracle_mode: str

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.abs_error is not None and self.abs_error < 0:
            raise ValueError("abs_error must be nonnegative")

    @property
    def charged_cost(self) -> int:
        """quantum_charged for quantum methods, elementary query total otherwise."""
        if self.method in QUANTUM_METHODS:
            return self.ledger.quantum_charged
        return self.ledger.total_cost

    def as_row(self) -> list[str]:
        err = "" if self.abs_error is None else repr(self.abs_error)
        return ([self.method, self.problem, repr(self.eps), str(self.seed), repr(self.value), err]
                + [str(v) for v in self.ledger.as_tuple()] + [self.oracle_mode])

    @classmethod
    def from_row(cls, row: dict) -> "ScalingRecord":
        err = row["abs_error"]
        return cls(row["method"], row["problem"], float(row["eps"]), int(row["seed"]),
                   float(row["value"]), float(err) if err != "" else None,
                   CostLedger.from_row(row), row["oracle_mode"])


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float


@dataclass
class ScalingReport:
    fits: dict = field(default_factory=dict)           # method -> SlopeFit or None
    success_rate: dict = field(default_factory=dict)   # (method, eps) -> fraction within eps
    records: list = field(default_factory=list)

    def slope(self, method: str) -> Optional[float]:
        fit = self.fits.get(method)
        return None if fit is None else fit.slope

    def summary(self) -> str:
        lines = ["method     slope  intercept  residual"]
        for m, fit in self.fits.items():
            if fit is None:
                lines.append(f"{m:<9}  (fewer than 4 eps values, no fit)")
            else:
                lines.append(f"{m:<9} {fit.slope:6.3f} {fit.intercept:10.3f} {fit.residual:9.4f}")
        for (m, eps), rate in sorted(self.success_rate.items(), key=lambda kv: (kv[0][0], -kv[0][1])):
            lines.append(f"  {m:<9} eps={eps:<10.6g} within-eps rate {rate:.3f}")
        return "\n".join(lines)


def fit_loglog_slope(records) -> SlopeFit:
    """OLS of ln(mean cost per eps) on ln(1/eps); residual is the RMS fit residual."""
    by_eps: dict[float, list[float]] = {}
    for eps, cost in records:
        if not cost > 0:
            raise ValueError(f"cost must be positive, got {cost} at eps={eps}")
        by_eps.setdefault(float(eps), []).append(float(cost))
    if len(by_eps) < 4:
        raise ValueError(f"need at least 4 distinct eps values, got {len(by_eps)}")
    eps = np.array(sorted(by_eps))
    cost = np.array([np.mean(by_eps[e]) for e in eps])
    x, y = np.log(1.0 / eps), np.log(cost)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return SlopeFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))))


# ---------------------------------------------------------------------------
# cells
# ---------------------------------------------------------------------------

def cell_seed(seed: int, method: str, problem: str, eps: float) -> np.random.SeedSequence:
    """Stream key for one (method, problem, eps, seed) cell; independent of execution order."""
    hi, lo = struct.unpack("<II", struct.pack("<d", eps))
    return np.random.SeedSequence([seed, zlib.crc32(method.encode()), zlib.crc32(problem.encode()), hi, lo])


@lru_cache(maxsize=None)
def _problem(name: str):
    return get_problem(name)


@lru_cache(maxsize=None)
def _calibration(name: str):
    rng = np.random.default_rng(np.random.SeedSequence([zlib.crc32(b"calibrate"), zlib.crc32(name.encode())]))
    return calibrate(_problem(name), rng)


def run_cell(problem_name: str, method: str, eps: float, seed: int, mode: OracleMode,
             delta: float = 0.05) -> ScalingRecord:
    problem = _problem(problem_name)
    rng = np.random.default_rng(cell_seed(seed, method, problem_name, eps))
    if method == "nmc":
        m, n = nested_mc_plan(problem, eps)
        value, ledger = nested_mc_estimate(problem, m, n, rng)
    elif method == "cmlmc":
        value, ledger = classical_mlmc_estimate(problem, eps, rng, calibration=_calibration(problem_name))
    elif method == "qamlmc":
        value, ledger = qa_mlmc_estimate(problem, eps, mode, rng)
    elif method == "qnest":
        value, ledger = q_nest_expect(problem, eps, delta, mode, rng)
    elif method == "qnest08":
        value, ledger = q_nest_expect_08(problem, eps, mode, rng)
    else:
        raise ValueError(f"unknown method {method!r}")
    truth = problem.ground_truth
    err = None if truth is None else abs(value - truth)
    label = "classical" if method not in QUANTUM_METHODS else str(mode)
    return ScalingRecord(method, problem_name, eps, seed, float(value), err, ledger, label)


def _run_cell_args(args):
    return run_cell(*args)


def plan_cells(problem: str, methods, eps_grid, seeds):
    cells = []
    for method in methods:
        for eps in eps_grid:
            if method == "nmc" and eps < NMC_MIN_EPS:
                continue
            cells.extend((problem, method, eps, seed) for seed in seeds)
    return cells


def validate(problem: str, methods, eps_grid, seeds):
    if problem not in PROBLEMS:
        raise ValueError(f"unknown problem {problem!r}; choose from {', '.join(PROBLEMS)}")
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise ValueError(f"unknown methods {bad}; choose from {', '.join(METHODS)}")
    if not eps_grid:
        raise ValueError("eps grid is empty")
    if any(not 0 < e < 1 for e in eps_grid):
        raise ValueError("every eps must lie in (0, 1)")
    if any(b >= a for a, b in zip(eps_grid, eps_grid[1:])):
        raise ValueError("eps grid must be strictly decreasing")
    if "cmlmc" in methods and eps_grid[0] >= 1 / math.e:
        raise ValueError("classical MLMC needs eps < 1/e")
    if not seeds:
        raise ValueError("seed list is empty")


def write_records(records: Sequence[ScalingRecord], out) -> None:
    """Write records with a header; ``out`` is a path or a text stream."""
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="") as fh:
            write_records(records, fh)
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(HEADER)
    for r in records:
        w.writerow(r.as_row())


def read_records(src) -> list[ScalingRecord]:
    if isinstance(src, (str, Path)):
        with open(src, newline="") as fh:
            return read_records(fh)
    return [ScalingRecord.from_row(row) for row in csv.DictReader(src)]


def records_to_csv(records) -> str:
    buf = io.StringIO()
    write_records(records, buf)
    return buf.getvalue()


def build_report(records: Sequence[ScalingRecord], methods) -> ScalingReport:
    report = ScalingReport(records=list(records))
    for method in methods:
        rows = [r for r in records if r.method == method]
        try:
            report.fits[method] = fit_loglog_slope([(r.eps, r.charged_cost) for r in rows])
        except ValueError:
            report.fits[method] = None
        for eps in sorted({r.eps for r in rows}, reverse=True):
            errs = [r.abs_error for r in rows if r.eps == eps and r.abs_error is not None]
            if errs:
                report.success_rate[(method, eps)] = float(np.mean(np.array(errs) <= eps))
    return report


def run_scaling_experiment(problem: str, methods, eps_grid, seeds, oracle_mode: OracleMode,
                           out_path=None, *, delta: float = 0.05, workers: int = 1) -> ScalingReport:
    """Run every (method, eps, seed) cell, write the CSV in canonical order, fit slopes."""
    methods, eps_grid, seeds = list(methods), [float(e) for e in eps_grid], [int(s) for s in seeds]
    validate(problem, methods, eps_grid, seeds)
    cells = [c + (oracle_mode, delta) for c in plan_cells(problem, methods, eps_grid, seeds)]
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_cell_args, cells, chunksize=max(1, len(cells) // (4 * workers))))
    else:
        records = [_run_cell_args(c) for c in cells]
    if out_path is not None:
        write_records(records, out_path)
    return build_report(records, methods)


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def parse_eps(text: str) -> list[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok.startswith("2^"):
            out.append(2.0 ** float(tok[2:]))
        else:
            out.append(float(tok))
    return out


def parse_seeds(text: str) -> list[int]:
    """``"20"`` means seeds 0..19; a comma list is taken literally."""
    if "," in text:
        return [int(t) for t in text.split(",") if t.strip()]
    n = int(text)
    if n < 1:
        raise ValueError("seed count must be positive")
    return list(range(n))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bench", description=__doc__)
    p.add_argument("--problem", required=True, choices=PROBLEMS)
    p.add_argument("--methods", required=True, help=f"comma list from {','.join(METHODS)}")
    p.add_argument("--eps", required=True, help="strictly decreasing comma list, e.g. 2^-3,2^-4 or 0.1,0.05")
    p.add_argument("--seeds", default="5", help="seed count or comma list")
    p.add_argument("--oracle", default="idealized", choices=("surrogate", "idealized", "adversarial"))
    p.add_argument("--p-fail", type=float, default=0.0)
    p.add_argument("--corruption", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        eps_grid = parse_eps(args.eps)
        seeds = parse_seeds(args.seeds)
        if args.oracle == "adversarial":
            mode = OracleMode.adversarial(args.p_fail, args.corruption)
        else:
            mode = OracleMode(args.oracle)
        if "qnest" in methods and not 0 < args.delta < 0.5:
            raise ValueError("--delta must lie in (0, 0.5)")
        if args.workers < 1:
            raise ValueError("--workers must be positive")
        validate(args.problem, methods, eps_grid, seeds)
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"bench: error: {exc}", file=sys.stderr)
        return 2
    report = run_scaling_experiment(args.problem, methods, eps_grid, seeds, mode, args.out,
                                    delta=args.delta, workers=args.workers)
    print(report.summary())
    return 0


if __name__ == "__main__":
    sys.exit(main())
