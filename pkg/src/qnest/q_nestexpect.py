"""Quantum-inside-quantum multilevel estimator of nested expectations.

The level sampler ``A_l`` draws one outer point and returns the difference
of two clipped, quantum-estimated inner means pushed through ``g``.  The
outer loop estimates every level mean with the quantum oracle again, and a
median over independent runs boosts the confidence.  ``qa_mlmc_estimate``
is the baseline that applies the same outer loop to the classical
antithetic level differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .classical_estimators import classical_level_samples, level_cost
from .cost_ledger import CostLedger, merge_all
from .level_means import classical_level_mean, quantum_level_mean
from .problem_model import NestedProblem
from .quantum_mean_oracle import (OracleMode, Sampler, charge, estimate_means,
                                  mom_group_size, mom_groups)

_OUTER_BLOCK = 2**14
MEDIAN_RATE = 0.18
BASE_SUCCESS = 0.8


@dataclass(frozen=True)
class LevelOutput:
    level: int
    delta: float
    ledger: CostLedger

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be nonnegative")


def median(values: Sequence[float]) -> float:
    """Middle order statistic; the two middle values are averaged for even counts."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("median of an empty sequence")
    return float(np.median(arr))


def clip_inner(raw, root_v: float):
    """Project inner-mean estimates onto [-sqrt(V), sqrt(V)], where the true mean lives."""
    return np.clip(raw, -root_v, root_v)


def inner_accuracy(problem: NestedProblem, l: int) -> tuple[float, float]:
    """(eps, delta) of the inner estimate at level l; delta is capped at 1/2."""
    K, V = problem.lipschitz_k, problem.second_moment_v
    eps = 2.0 ** -(l + 1) / K
    if V == 0:
        return eps, 0.5
    delta = 2.0 ** -(2 * l + 1) / (4 * K * K * V)
    return eps, min(delta, 0.5)


# ---------------------------------------------------------------------------
# B_l and A_l
# ---------------------------------------------------------------------------

def _inner_sampler(problem: NestedProblem, xs: np.ndarray) -> Sampler:
    true_mean = None
    if problem.conditional_mean is not None:
        true_mean = lambda: problem.conditional_mean(xs)
    return Sampler(
        draw=lambda rng, n: problem.inner_phi(xs, problem.gen_y(rng, xs, n)),
        unit_cost=CostLedger(gen_y=1, phi=1), batch=len(xs), dim=problem.dim,
        mean_draw=lambda rng, n, k: problem.inner_means(rng, xs, n, k),
        true_mean=true_mean,
    )


def b_level_batch(problem: NestedProblem, xs, l: int, oracle_mode: OracleMode,
                  rng: np.random.Generator) -> tuple[np.ndarray, CostLedger]:
    """B_l at every point of ``xs``; returns g(x, clipped estimate) and the summed ledger."""
    if l < 0:
        raise ValueError("level must be nonnegative")
    xs = np.asarray(xs, dtype=float)
    B = len(xs)
    if problem.second_moment_v == 0:
        zero = np.zeros(B) if problem.dim == 1 else np.zeros((B, problem.dim))
        return np.asarray(problem.g(xs, zero), dtype=float), CostLedger(g=B)
    eps, delta = inner_accuracy(problem, l)
    est, ledger = estimate_means(_inner_sampler(problem, xs), problem.root_v, eps, delta,
                                 oracle_mode, rng)
    out = problem.g(xs, clip_inner(est, problem.root_v))
    return np.asarray(out, dtype=float), ledger + CostLedger(g=B)


def b_level(problem: NestedProblem, x, l: int, oracle_mode: OracleMode, rng: np.random.Generator):
    vals, ledger = b_level_batch(problem, np.array([x], dtype=float), l, oracle_mode, rng)
    return float(vals[0]), ledger


def b_unit_cost(problem: NestedProblem, l: int) -> CostLedger:
    """Charged ledger of one B_l call (no classical surrogate draws)."""
    if problem.second_moment_v == 0:
        return CostLedger(g=1)
    eps, delta = inner_accuracy(problem, l)
    unit = Sampler(draw=None, unit_cost=CostLedger(gen_y=1, phi=1), dim=problem.dim)
    return charge(unit, problem.root_v, eps, delta) + CostLedger(g=1)


def b_real_draws(problem: NestedProblem, l: int) -> int:
    """Inner samples the classical surrogate draws for one B_l call."""
    if problem.second_moment_v == 0:
        return 0
    eps, delta = inner_accuracy(problem, l)
    return mom_groups(delta / problem.dim) * mom_group_size(problem.root_v, eps)


def a_unit_cost(problem: NestedProblem, l: int) -> CostLedger:
    ledger = CostLedger(gen_x=1) + b_unit_cost(problem, l)
    return ledger if l == 0 else ledger + b_unit_cost(problem, l - 1)


def a_level_batch(problem: NestedProblem, l: int, size: int, oracle_mode: OracleMode,
                  rng: np.random.Generator) -> tuple[np.ndarray, CostLedger]:
    """``size`` independent draws of A_l, processed in blocks."""
    if l < 0:
        raise ValueError("level must be nonnegative")
    out = np.empty(size)
    ledgers = []
    for s in range(0, size, _OUTER_BLOCK):
        c = min(_OUTER_BLOCK, size - s)
        xs = problem.gen_x(rng, c)
        ledgers.append(CostLedger(gen_x=c))
        if l == 0:
            vals, led = b_level_batch(problem, xs, 0, oracle_mode, rng)
            ledgers.append(led)
        else:
            fine_rng, coarse_rng = rng.spawn(2)
            fine, led_f = b_level_batch(problem, xs, l, oracle_mode, fine_rng)
            coarse, led_c = b_level_batch(problem, xs, l - 1, oracle_mode, coarse_rng)
            vals = fine - coarse
            ledgers += [led_f, led_c]
        out[s:s + c] = vals
    return out, merge_all(ledgers)


def a_level(problem: NestedProblem, l: int, oracle_mode: OracleMode,
            rng: np.random.Generator) -> LevelOutput:
    vals, ledger = a_level_batch(problem, l, 1, oracle_mode, rng)
    return LevelOutput(l, float(vals[0]), ledger)


def quantum_level_sampler(problem: NestedProblem, oracle_mode: OracleMode):
    """(l, size, rng) -> (draws, ledger), the shape ``estimate_sequence_params`` expects."""
    return lambda l, size, rng: a_level_batch(problem, l, size, oracle_mode, rng)


def level_oracle_sampler(problem: NestedProblem, l: int, oracle_mode: OracleMode) -> Sampler:
    """A_l wrapped for the outer quantum mean estimate."""
    real = b_real_draws(problem, l) + (b_real_draws(problem, l - 1) if l else 0)
    return Sampler(
        draw=lambda rng, n: a_level_batch(problem, l, n, oracle_mode, rng)[0][None, :],
        unit_cost=a_unit_cost(problem, l),
        real_cost=real if oracle_mode.kind == "surrogate" else 0,
        true_mean=lambda: quantum_level_mean(problem, l, oracle_mode),
    )


# ---------------------------------------------------------------------------
# outer loops
# ---------------------------------------------------------------------------

def _ceil_log2(x: float) -> int:
    return max(0, math.ceil(math.log2(x) - 1e-12))


def qnest_levels(eps: float) -> int:
    return _ceil_log2(2.0 / eps)


def qnest_sigma(problem: NestedProblem, l: int) -> float:
    if l == 0:
        return math.sqrt(2.0 + 2.0 * problem.outer_variance_s)
    return math.sqrt(10.0) * 2.0**-l


def level_failure(l: int) -> float:
    return 0.1 ** (l + 1)


def _check_eps(eps):
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


def _run_levels(samplers, sigmas, eps_l, oracle_mode, rng):
    streams = rng.spawn(len(samplers))
    outputs = []
    for l, (sampler, sigma, r) in enumerate(zip(samplers, sigmas, streams)):
        value, ledger = estimate_means(sampler, sigma, eps_l, level_failure(l), oracle_mode, r)
        outputs.append(LevelOutput(l, float(np.asarray(value).reshape(-1)[0]), ledger))
    total = math.fsum(o.delta for o in outputs)
    return total, merge_all(o.ledger for o in outputs), outputs


def q_nest_expect_08(problem: NestedProblem, eps: float, oracle_mode: OracleMode,
                     rng: np.random.Generator, *, details: bool = False):
    """Sum of quantum estimates of every level mean; within eps with probability >= 0.8.

    With ``details`` the per-level outputs are returned as a third element.
    """
    _check_eps(eps)
    L = qnest_levels(eps)
    eps_l = eps / (2 * L + 2)
    samplers = [level_oracle_sampler(problem, l, oracle_mode) for l in range(L + 1)]
    sigmas = [qnest_sigma(problem, l) for l in range(L + 1)]
    total, ledger, outputs = _run_levels(samplers, sigmas, eps_l, oracle_mode, rng)
    return (total, ledger, outputs) if details else (total, ledger)


def repetitions_for(delta: float) -> int:
    """ceil(ln(1/delta) / 0.18), bumped to the next odd integer."""
    if not 0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 0.5), got {delta}")
    n = max(1, math.ceil(math.log(1.0 / delta) / MEDIAN_RATE - 1e-12))
    return n if n % 2 else n + 1


def median_trick(run_once, n: int, rng: np.random.Generator):
    """Median of ``n`` independent ``run_once(rng) -> (value, ledger)`` results."""
    if n < 1:
        raise ValueError("need at least one repetition")
    results = [run_once(r) for r in rng.spawn(n)]
    return median([v for v, _ in results]), merge_all(led for _, led in results)


def q_nest_expect(problem: NestedProblem, eps: float, delta: float, oracle_mode: OracleMode,
                  rng: np.random.Generator, *, repetitions: Optional[int] = None):
    """Median of independent 0.8-confidence runs; within eps with probability >= 1 - delta.

    ``repetitions`` overrides the count derived from ``delta``.
    """
    _check_eps(eps)
    n = repetitions_for(delta) if repetitions is None else int(repetitions)
    return median_trick(lambda r: q_nest_expect_08(problem, eps, oracle_mode, r), n, rng)


def qamlmc_levels(problem: NestedProblem, eps: float) -> int:
    c = 2.0 * problem.lipschitz_k * problem.root_v
    return 0 if c == 0 else _ceil_log2((c / eps) ** 2)


def qamlmc_sigma(problem: NestedProblem, l: int) -> float:
    kv = 2.0 * problem.lipschitz_k**2 * problem.second_moment_v
    if l == 0:
        return math.sqrt(kv + 2.0 * problem.outer_variance_s)
    return math.sqrt(kv) * 2.0 ** (-l / 2)


def classical_oracle_sampler(problem: NestedProblem, l: int) -> Sampler:
    return Sampler(
        draw=lambda rng, n: classical_level_samples(problem, l, n, rng)[0][None, :],
        unit_cost=level_cost(l),
        true_mean=lambda: classical_level_mean(problem, l),
    )


def qa_mlmc_estimate(problem: NestedProblem, eps: float, oracle_mode: OracleMode,
                     rng: np.random.Generator, *, details: bool = False):
    """Quantum mean estimation of each classical antithetic level, same outer schedule."""
    _check_eps(eps)
    L = qamlmc_levels(problem, eps)
    eps_l = eps / (2 * L + 2)
    samplers = [classical_oracle_sampler(problem, l) for l in range(L + 1)]
    sigmas = [qamlmc_sigma(problem, l) for l in range(L + 1)]
    total, ledger, outputs = _run_levels(samplers, sigmas, eps_l, oracle_mode, rng)
    return (total, ledger, outputs) if details else (total, ledger)
