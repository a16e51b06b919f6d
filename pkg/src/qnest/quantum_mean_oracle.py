"""Simulated quantum-accelerated mean estimation with a charged query cost.

The estimate and the cost are decoupled on purpose.  The cost is *charged*
analytically, ``ceil(sigma/eps) * ceil(ln(1/delta) + 1)`` queries per
estimate, each query costing one run of the sampler.  The value comes
from one of three stand-ins:

surrogate
    median of ``k = ceil(24 ln(1/delta))`` group means of
    ``m = ceil(4 sigma^2 / eps^2)`` real draws.  Chebyshev gives every group
    a success probability of at least 3/4 and the median lifts it to
    ``1 - delta``.
idealized
    ``truth + U[-eps, eps]`` with probability ``1 - delta``, otherwise
    ``truth +- 3 eps``.  Needs the sampler's true mean.
adversarial
    like idealized, but it fails with probability exactly ``p_fail``, and
    a failure returns ``truth + corruption_scale``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .cost_ledger import CostLedger

Array = np.ndarray

IDEALIZED_FAILURE_OFFSET = 3.0   # in units of eps
_MAX_BLOCK = 2**22


class MissingTrueMean(ValueError):
    """Idealized and adversarial modes need a sampler that exposes its mean."""


@dataclass(frozen=True)
class OracleMode:
    kind: str = "surrogate"
    p_fail: float = 0.0
    corruption_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("surrogate", "idealized", "adversarial"):
            raise ValueError(f"unknown oracle mode {self.kind!r}")
        if not 0.0 <= self.p_fail <= 1.0:
            raise ValueError("p_fail must lie in [0, 1]")

    @classmethod
    def surrogate(cls) -> "OracleMode":
        return cls("surrogate")

    @classmethod
    def idealized(cls) -> "OracleMode":
        return cls("idealized")

    @classmethod
    def adversarial(cls, p_fail: float, corruption_scale: float = 1.0) -> "OracleMode":
        return cls("adversarial", p_fail, corruption_scale)

    @property
    def needs_truth(self) -> bool:
        return self.kind != "surrogate"

    def __str__(self) -> str:
        if self.kind == "adversarial":
            return f"adversarial(p_fail={self.p_fail};corruption={self.corruption_scale})"
        return self.kind


@dataclass(frozen=True)
class Sampler:
    """A batch of ``batch`` independent randomized procedures.

    ``draw(rng, n)`` returns ``n`` outputs of each procedure, shape
    ``(batch, n)`` (plus a trailing ``dim`` axis for vector outputs).
    ``unit_cost`` is the charged cost of a single call of one procedure and
    ``real_cost`` the surrogate draws that one call performs internally.
    ``mean_draw(rng, n, k)`` optionally returns ``k`` exact-in-law means of
    ``n`` draws; ``true_mean`` is an array or a zero-argument callable.
    """

    draw: Callable[[np.random.Generator, int], Array]
    unit_cost: CostLedger
    batch: int = 1
    dim: int = 1
    real_cost: int = 0
    mean_draw: Optional[Callable[[np.random.Generator, int, int], Array]] = None
    true_mean: Union[None, Array, Callable[[], Array]] = None

    def mean(self) -> Array:
        if self.true_mean is None:
            raise MissingTrueMean("sampler does not expose its true mean")
        tm = self.true_mean() if callable(self.true_mean) else self.true_mean
        shape = (self.batch,) + ((self.dim,) if self.dim > 1 else ())
        return np.broadcast_to(np.asarray(tm, dtype=float), shape)


@dataclass(frozen=True)
class MeanEstimate:
    value: Union[float, Array]
    target_eps: float
    target_delta: float
    ledger: CostLedger


def _ceil(x: float) -> int:
    # guards against 0.5/0.1 = 5.000000000000001 style rounding
    return int(math.ceil(x * (1.0 - 1e-12)))


def charged_queries(sigma_bound: float, eps: float, delta: float) -> int:
    """Quantum queries charged for one (sigma, eps, delta) estimate; at least one."""
    return max(1, _ceil(sigma_bound / eps)) * _ceil(math.log(1.0 / delta) + 1.0)


def mom_groups(delta: float) -> int:
    return max(1, _ceil(24.0 * math.log(1.0 / delta)))


def mom_group_size(sigma_bound: float, eps: float) -> int:
    return max(1, _ceil(4.0 * sigma_bound**2 / eps**2))


def failure_law(mode: OracleMode, eps: float, delta: float):
    """(probability of failure, offsets, offset probabilities) of the known-mean modes."""
    if mode.kind == "idealized":
        off = IDEALIZED_FAILURE_OFFSET * eps
        return delta, np.array([-off, off]), np.array([0.5, 0.5])
    if mode.kind == "adversarial":
        return mode.p_fail, np.array([mode.corruption_scale]), np.array([1.0])
    raise ValueError("the surrogate has no closed-form failure law")


def charge(sampler: Sampler, sigma_bound: float, eps: float, delta: float) -> CostLedger:
    """Charged ledger of one estimate per batch member (classical draws excluded)."""
    per_coord = delta / sampler.dim
    nq = charged_queries(sigma_bound, eps, per_coord) * sampler.dim * sampler.batch
    u = sampler.unit_cost
    return CostLedger(u.gen_x * nq, u.gen_y * nq, u.phi * nq, u.g * nq,
                      quantum_charged=u.total_cost * nq)


def _check(sigma_bound, eps, delta):
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if sigma_bound < 0:
        raise ValueError("sigma_bound must be nonnegative")


def _surrogate_group_means(sampler: Sampler, rng, m: int, k: int) -> Array:
    if sampler.mean_draw is not None:
        return np.asarray(sampler.mean_draw(rng, m, k), dtype=float)
    groups_per_block = max(1, _MAX_BLOCK // max(1, m * sampler.batch))
    parts = []
    for start in range(0, k, groups_per_block):
        c = min(groups_per_block, k - start)
        if m * sampler.batch <= _MAX_BLOCK:
            vals = np.asarray(sampler.draw(rng, c * m), dtype=float)
            vals = vals.reshape((sampler.batch, c, m) + vals.shape[2:])
            parts.append(vals.mean(axis=2))
        else:
            for _ in range(c):
                acc, left = 0.0, m
                while left > 0:
                    step = min(left, max(1, _MAX_BLOCK // sampler.batch))
                    acc = acc + np.asarray(sampler.draw(rng, step), dtype=float).sum(axis=1)
                    left -= step
                parts.append((acc / m)[:, None])
    return np.concatenate(parts, axis=1)


def _known_mean_estimate(truth: Array, mode: OracleMode, eps: float, delta: float, rng) -> Array:
    p, offsets, probs = failure_law(mode, eps, delta)
    out = truth + rng.uniform(-eps, eps, size=truth.shape)
    failed = rng.random(truth.shape) < p
    if failed.any():
        which = rng.choice(len(offsets), size=truth.shape, p=probs)
        out = np.where(failed, truth + offsets[which], out)
    return out


def estimate_means(sampler: Sampler, sigma_bound: float, eps: float, delta: float,
                   mode: OracleMode, rng: np.random.Generator) -> tuple[Array, CostLedger]:
    """Batched estimator: one (eps, delta) estimate per batch member.

    Vector samplers are estimated coordinate by coordinate, each with
    failure budget ``delta / dim``.  Returns values of shape ``(batch[, dim])``
    and the ledger summed over the batch.
    """
    _check(sigma_bound, eps, delta)
    ledger = charge(sampler, sigma_bound, eps, delta)
    per_coord = delta / sampler.dim
    if mode.kind == "surrogate":
        k = mom_groups(per_coord)
        m = mom_group_size(sigma_bound, eps)
        means = _surrogate_group_means(sampler, rng, m, k)
        values = np.median(means, axis=1)
        drawn = sampler.batch * k * m * (1 + sampler.real_cost)
        ledger = ledger + CostLedger(classical_charged=drawn)
    else:
        values = _known_mean_estimate(np.array(sampler.mean(), dtype=float), mode, eps, per_coord, rng)
    return values, ledger


def quantum_mean_estimate(sampler: Sampler, sigma_bound: float, eps: float, delta: float,
                          mode: OracleMode, rng: np.random.Generator) -> MeanEstimate:
    """Estimate the mean of ``sampler`` to accuracy ``eps`` with confidence ``1 - delta``."""
    values, ledger = estimate_means(sampler, sigma_bound, eps, delta, mode, rng)
    value = float(values.reshape(-1)[0]) if sampler.batch == 1 and sampler.dim == 1 else values
    return MeanEstimate(value, eps, delta, ledger)


def scalar_sampler(draw: Callable[[np.random.Generator, int], Array], *,
                   unit_cost: CostLedger = CostLedger(gen_x=1), true_mean=None,
                   mean_draw=None) -> Sampler:
    """Wrap a plain ``draw(rng, n) -> (n,)`` procedure as a batch-of-one sampler."""
    md = None
    if mean_draw is not None:
        md = lambda rng, n, k: np.asarray(mean_draw(rng, n, k))[None, :]
    return Sampler(draw=lambda rng, n: np.asarray(draw(rng, n), dtype=float)[None, :],
                   unit_cost=unit_cost, true_mean=true_mean, mean_draw=md)
