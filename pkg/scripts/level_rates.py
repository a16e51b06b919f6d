"""Empirical (alpha, beta, gamma) of the classical and quantum level samplers on the Gaussian toy."""

import argparse

import numpy as np

from qnest.classical_estimators import classical_level_sampler, estimate_sequence_params
from qnest.problem_model import get_problem
from qnest.q_nestexpect import quantum_level_sampler
from qnest.quantum_mean_oracle import OracleMode


def show(label, sp):
    print(f"{label:<22} alpha={sp.alpha:.3f} beta={sp.beta:.3f} gamma={sp.gamma:.3f}")
    for l, (m, v, c) in enumerate(zip(sp.means, sp.variances, sp.costs), start=1):
        print(f"    l={l}  |E D|={m:.3e}  Var D={v:.3e}  cost={c:.0f}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--problem", default="gauss-toy")
    ap.add_argument("--replicates", type=int, default=10**4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    p = get_problem(args.problem)
    rng = np.random.default_rng(args.seed)
    show("classical antithetic", estimate_sequence_params(classical_level_sampler(p), 8, args.replicates, rng))
    for mode in (OracleMode.surrogate(), OracleMode.idealized()):
        show(f"quantum A_l ({mode})", estimate_sequence_params(quantum_level_sampler(p, mode), 6, args.replicates, rng))


if __name__ == "__main__":
    main()
