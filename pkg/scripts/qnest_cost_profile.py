"""Local log-log slope of the charged cost of q_nest_expect_08 far beyond the desk-scale grid.

The charged cost is a deterministic function of eps, so no sampling is needed.
"""

import numpy as np

from qnest.bench_cli import fit_loglog_slope
from qnest.problem_model import get_problem
from qnest.q_nestexpect import a_unit_cost, level_failure, qamlmc_levels, qamlmc_sigma, qnest_levels, qnest_sigma
from qnest.classical_estimators import level_cost
from qnest.quantum_mean_oracle import charged_queries


def qnest_cost(p, eps):
    L = qnest_levels(eps)
    el = eps / (2 * L + 2)
    return sum(charged_queries(qnest_sigma(p, l), el, level_failure(l)) * a_unit_cost(p, l).total_cost
               for l in range(L + 1))


def qamlmc_cost(p, eps):
    L = qamlmc_levels(p, eps)
    el = eps / (2 * L + 2)
    return sum(charged_queries(qamlmc_sigma(p, l), el, level_failure(l)) * level_cost(l).total_cost
               for l in range(L + 1))


def main():
    for name in ("gauss-toy", "coc"):
        p = get_problem(name)
        print(name)
        for lo in (3, 6, 10, 15, 20):
            grid = [2.0**-k for k in range(lo, lo + 5)]
            q = fit_loglog_slope([(e, qnest_cost(p, e)) for e in grid]).slope
            c = fit_loglog_slope([(e, qamlmc_cost(p, e)) for e in grid]).slope
            L = qnest_levels(grid[-1])
            print(f"  eps 2^-{lo}..2^-{lo + 4}: qnest slope {q:.3f}  qamlmc slope {c:.3f}  "
                  f"qnest cost*eps/L^4 {qnest_cost(p, grid[-1]) * grid[-1] / L**4:.1f}")


if __name__ == "__main__":
    main()
