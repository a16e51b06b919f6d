"""Nested Monte Carlo, antithetic multilevel Monte Carlo and rate fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .cost_ledger import CostLedger, ZERO, merge_all
from .problem_model import NestedProblem

_BLOCK = 2**21


@dataclass(frozen=True)
class MlmcSchedule:
    top_level_L: int
    replications: tuple[int, ...]
    regime: str
    variances: tuple[float, ...] = ()
    costs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.top_level_L < 0:
            raise ValueError("top level must be nonnegative")
        if len(self.replications) != self.top_level_L + 1 or min(self.replications) < 1:
            raise ValueError("need N_l >= 1 for l = 0..L")

    @property
    def planned_cost(self) -> float:
        return float(sum(n * c for n, c in zip(self.replications, self.costs)))


def regime_of(beta: float, gamma: float, tol: float = 1e-12) -> str:
    if abs(beta - gamma) <= tol:
        return "beta_eq_gamma"
    return "beta_gt_gamma" if beta > gamma else "beta_lt_gamma"


def allocate(variances: Sequence[float], costs: Sequence[float], eps: float) -> tuple[int, ...]:
    """N_l proportional to sqrt(V_l / C_l), scaled so sum V_l / N_l <= eps^2 / 2."""
    v = np.maximum(np.asarray(variances, dtype=float), 0.0)
    c = np.asarray(costs, dtype=float)
    total = np.sum(np.sqrt(v * c))
    n = np.ceil(2.0 / eps**2 * np.sqrt(v / c) * total)
    return tuple(int(max(1, x)) for x in n)


def top_level(bias_const: float, eps: float, alpha: float) -> int:
    """Smallest L with bias_const * 2^(-alpha L) <= eps / sqrt(2)."""
    if bias_const <= 0:
        return 0
    return max(0, math.ceil(math.log2(bias_const * math.sqrt(2.0) / eps) / alpha - 1e-12))


def _check_eps(eps):
    if not 0 < eps < 1 / math.e:
        raise ValueError(f"eps must lie in (0, 1/e), got {eps}")


def plan_schedule(alpha: float, beta: float, gamma: float, eps: float,
                  bias_const: float, var_const: float, cost_const: float) -> MlmcSchedule:
    """Giles-style schedule for V_l = var_const 2^(-beta l), C_l = cost_const 2^(gamma l)."""
    _check_eps(eps)
    if alpha < 0.5 * max(beta, gamma):
        raise ValueError("need alpha >= max(beta, gamma) / 2")
    L = top_level(bias_const, eps, alpha)
    levels = np.arange(L + 1)
    v = var_const * 2.0 ** (-beta * levels)
    c = cost_const * 2.0 ** (gamma * levels)
    return MlmcSchedule(L, allocate(v, c, eps), regime_of(beta, gamma), tuple(v), tuple(c))


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def nested_mc_estimate(problem: NestedProblem, m: int, n: int, rng: np.random.Generator):
    """(1/m) sum_i g(X_i, (1/n) sum_j phi(X_i, Y_ij))."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rows = max(1, _BLOCK // n)
    total = 0.0
    for s in range(0, m, rows):
        c = min(rows, m - s)
        xs = problem.gen_x(rng, c)
        acc = 0.0
        left = n
        while left > 0:
            step = min(left, _BLOCK)
            acc = acc + problem.inner_phi(xs, problem.gen_y(rng, xs, step)).sum(axis=1)
            left -= step
        total += float(np.sum(problem.g(xs, acc / n)))
    return total / m, CostLedger(gen_x=m, gen_y=m * n, phi=m * n, g=m)


def nested_mc_plan(problem: NestedProblem, eps: float) -> tuple[int, int]:
    """(m, n) for the nested estimator: n ~ K sqrt(V)/eps inner, m from the variance budget."""
    K, V, S = problem.lipschitz_k, problem.second_moment_v, problem.outer_variance_s
    n = max(1, math.ceil(K * math.sqrt(V) / eps))
    m = max(1, math.ceil(2.0 * (S + K * K * V / n) / eps**2))
    return m, n


def level_cost(l: int) -> CostLedger:
    """Per-sample ledger of the classical level-l sampler."""
    if l == 0:
        return CostLedger(gen_x=1, gen_y=1, phi=1, g=1)
    n = 2**l
    return CostLedger(gen_x=1, gen_y=n, phi=n, g=3)


def classical_level_samples(problem: NestedProblem, l: int, size: int,
                            rng: np.random.Generator) -> tuple[np.ndarray, CostLedger]:
    """``size`` independent antithetic level-l differences."""
    if l < 0:
        raise ValueError("level must be nonnegative")
    n = 2**l
    out = np.empty(size)
    rows = max(1, _BLOCK // n)
    for s in range(0, size, rows):
        c = min(rows, size - s)
        xs = problem.gen_x(rng, c)
        vals = problem.inner_phi(xs, problem.gen_y(rng, xs, n))
        if l == 0:
            out[s:s + c] = problem.g(xs, vals[:, 0])
            continue
        # 1-based odd positions are 0-based even positions
        s_odd = vals[:, 0::2].sum(axis=1)
        s_even = vals[:, 1::2].sum(axis=1)
        half = n // 2
        fine = problem.g(xs, (s_even + s_odd) / n)
        coarse = 0.5 * (problem.g(xs, s_even / half) + problem.g(xs, s_odd / half))
        out[s:s + c] = fine - coarse
    return out, level_cost(l).scale(size)


def classical_level_sample(problem: NestedProblem, l: int, rng: np.random.Generator):
    vals, ledger = classical_level_samples(problem, l, 1, rng)
    return float(vals[0]), ledger


# ---------------------------------------------------------------------------
# classical MLMC
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Calibration:
    """Level-variance constants from a pilot run: V_0 and V_l <= var_const 2^-l."""
    v0: float
    var_const: float
    ledger: CostLedger = ZERO
    pilot_levels: int = 0


PILOT_REPLICATES = 1000
PILOT_LEVELS = 4


def calibrate(problem: NestedProblem, rng: np.random.Generator, *,
              replicates: int = PILOT_REPLICATES, levels: int = PILOT_LEVELS) -> Calibration:
    ledgers = []
    v0 = 0.0
    var_const = 0.0
    for l in range(levels + 1):
        vals, led = classical_level_samples(problem, l, replicates, rng)
        ledgers.append(led)
        v = float(np.var(vals, ddof=1))
        if l == 0:
            v0 = v
        else:
            var_const = max(var_const, v * 2.0**l)
    return Calibration(v0, var_const, merge_all(ledgers), levels)


def classical_schedule(problem: NestedProblem, eps: float, calibration: Calibration) -> MlmcSchedule:
    """(alpha, beta, gamma) = (0.5, 1, 1); L from the a-priori bias bound K sqrt(V) 2^(-l/2)."""
    _check_eps(eps)
    bias_const = problem.lipschitz_k * problem.root_v
    L = top_level(bias_const, eps, 0.5)
    v = [calibration.v0] + [calibration.var_const * 2.0**-l for l in range(1, L + 1)]
    c = [level_cost(l).total_cost for l in range(L + 1)]
    return MlmcSchedule(L, allocate(v, c, eps), "beta_eq_gamma", tuple(v), tuple(c))


def classical_mlmc_estimate(problem: NestedProblem, eps: float, rng: np.random.Generator, *,
                            calibration: Optional[Calibration] = None):
    """Telescoping sum of per-level sample means of the antithetic sampler.

    Without ``calibration`` a pilot run is made first and its cost is
    included in the returned ledger.
    """
    _check_eps(eps)
    pilot = ZERO
    if calibration is None:
        calibration = calibrate(problem, rng)
        pilot = calibration.ledger
    sched = classical_schedule(problem, eps, calibration)
    level_rngs = rng.spawn(sched.top_level_L + 1)
    total = 0.0
    ledgers = [pilot]
    for l, (n_l, r) in enumerate(zip(sched.replications, level_rngs)):
        vals, led = classical_level_samples(problem, l, n_l, r)
        total += float(np.mean(vals))
        ledgers.append(led)
    return total, merge_all(ledgers)


# ---------------------------------------------------------------------------
# empirical (alpha, beta, gamma)
# ---------------------------------------------------------------------------

LevelSampler = Callable[[int, int, np.random.Generator], tuple[np.ndarray, CostLedger]]


@dataclass(frozen=True)
class SequenceParams:
    alpha: Optional[float]
    beta: Optional[float]
    gamma: Optional[float]
    degenerate: frozenset = field(default_factory=frozenset)
    means: tuple[float, ...] = ()
    variances: tuple[float, ...] = ()
    costs: tuple[float, ...] = ()


def _slope(levels, stats):
    stats = np.asarray(stats, dtype=float)
    if np.any(stats <= 0):
        return None
    return float(np.polyfit(levels, np.log2(stats), 1)[0])


def estimate_sequence_params(level_sampler: LevelSampler, max_level: int, replicates: int,
                             rng: np.random.Generator) -> SequenceParams:
    """Least-squares fit of log2 |E Delta_l|, log2 Var Delta_l and log2 cost over l = 1..max_level.

    A statistic that is identically zero at some level makes its exponent
    degenerate; it is reported as None and listed in ``degenerate``.
    """
    if max_level < 3:
        raise ValueError("max_level must be at least 3")
    if replicates < 1000:
        raise ValueError("need at least 1000 replicates per level")
    levels = np.arange(1, max_level + 1)
    means, variances, costs = [], [], []
    for l, r in zip(levels, rng.spawn(len(levels))):
        vals, led = level_sampler(int(l), replicates, r)
        means.append(abs(float(np.mean(vals))))
        variances.append(float(np.var(vals, ddof=1)))
        costs.append(led.total_cost / replicates)
    a, b, c = _slope(levels, means), _slope(levels, variances), _slope(levels, costs)
    degenerate = frozenset(n for n, s in (("alpha", a), ("beta", b), ("gamma", c)) if s is None)
    return SequenceParams(None if a is None else -a, None if b is None else -b, c, degenerate,
                          tuple(means), tuple(variances), tuple(costs))


def classical_level_sampler(problem: NestedProblem) -> LevelSampler:
    return lambda l, size, rng: classical_level_samples(problem, l, size, rng)
