"""Exact expectations of level samplers, used as the true means in known-mean oracle modes.

For the quantum sequence the inner estimate under a known-mean oracle is
``clip(gamma(x) + noise)`` with noise ``U[-eps, eps]`` with probability
``1 - p`` and an atom law otherwise, so ``E g(x, .)`` is a one-dimensional
integral per outer node.  For the classical antithetic sequence the level
mean is ``E g(x, mean of 2^l inner draws)``, taken from the problem's exact
law of inner means.  Results are memoised on the problem.
"""

from __future__ import annotations

import numpy as np

from .problem_model import NestedProblem
from .quadrature import integrate_pieces
from .quantum_mean_oracle import OracleMode, failure_law


def _outer_rule(problem: NestedProblem):
    if problem.outer_rule is None:
        raise ValueError(f"problem {problem.name!r} has no outer quadrature rule")
    return problem.outer_rule


def _conditional_means(problem: NestedProblem, xs):
    if problem.conditional_mean is None:
        raise ValueError(f"problem {problem.name!r} has no analytic conditional mean")
    return np.asarray(problem.conditional_mean(xs), dtype=float)


def noisy_clipped_g(problem: NestedProblem, xs, gam, eps: float, p_fail: float,
                    offsets, offset_probs) -> np.ndarray:
    """E g(x, clip(gamma + noise)) per row, for scalar inner means."""
    r = problem.root_v
    lo, hi = gam - eps, gam + eps
    cuts = [np.full_like(gam, -r), np.full_like(gam, r)]
    if problem.g_breakpoints is not None:
        bp = np.asarray(problem.g_breakpoints(xs), dtype=float)
        cuts.extend(bp[:, j] for j in range(bp.shape[1]))
    inner = np.clip(np.stack(cuts, axis=1), lo[:, None], hi[:, None])
    ends = np.sort(np.concatenate([lo[:, None], inner, hi[:, None]], axis=1), axis=1)
    x3 = xs[:, None, None]
    uniform = integrate_pieces(lambda z: problem.g(x3, np.clip(z, -r, r)), ends) / (2 * eps)
    out = (1.0 - p_fail) * uniform
    for o, q in zip(offsets, offset_probs):
        out = out + p_fail * q * problem.g(xs, np.clip(gam + o, -r, r))
    return out


def noisy_clipped_max(r: float, gam, eps: float, p_fail: float, offsets, offset_probs) -> np.ndarray:
    """E max_k clip(gamma_k + noise_k) per row, independent noise per coordinate.

    Uses E M = r - int_{-r}^{r} prod_k F_k(t) dt for M in [-r, r].
    """
    offsets = np.asarray(offsets, dtype=float)
    bp = [gam - eps, gam + eps] + [gam + o for o in offsets]
    pts = np.clip(np.concatenate(bp, axis=1), -r, r)
    B = gam.shape[0]
    ends = np.sort(np.concatenate([np.full((B, 1), -r), pts, np.full((B, 1), r)], axis=1), axis=1)

    def prod_cdf(t):
        out = np.ones_like(t)
        for k in range(gam.shape[1]):
            gk = gam[:, k, None, None]
            f = (1 - p_fail) * np.clip((t - gk + eps) / (2 * eps), 0.0, 1.0)
            for o, q in zip(offsets, offset_probs):
                f = f + p_fail * q * (gk + o <= t)
            out = out * f
        return out

    return r - integrate_pieces(prod_cdf, ends)


def quantum_inner_law(problem: NestedProblem, l: int, mode: OracleMode):
    from .q_nestexpect import inner_accuracy
    eps, delta = inner_accuracy(problem, l)
    p, offsets, probs = failure_law(mode, eps, delta / problem.dim)
    return eps, p, offsets, probs


def quantum_level_value(problem: NestedProblem, l: int, mode: OracleMode) -> float:
    """s_l = E[B_l(X)] when every inner estimate comes from ``mode``."""
    key = ("quantum", l, mode)
    if key in problem._memo:
        return problem._memo[key]
    xs, w = _outer_rule(problem)
    xs = np.asarray(xs, dtype=float)
    if problem.second_moment_v == 0:
        vals = problem.g(xs, np.zeros_like(xs) if problem.dim == 1 else np.zeros((len(xs), problem.dim)))
    else:
        eps, p, offsets, probs = quantum_inner_law(problem, l, mode)
        gam = _conditional_means(problem, xs)
        if problem.dim > 1:
            if problem.g_kind != "max":
                raise ValueError("exact level means for vector problems need g = max")
            vals = noisy_clipped_max(problem.root_v, gam, eps, p, offsets, probs)
        else:
            vals = noisy_clipped_g(problem, xs, gam, eps, p, offsets, probs)
    out = float(np.dot(w, vals))
    problem._memo[key] = out
    return out


def quantum_level_mean(problem: NestedProblem, l: int, mode: OracleMode) -> float:
    """E[Delta_l] of the coupled quantum level sampler."""
    s = quantum_level_value(problem, l, mode)
    return s if l == 0 else s - quantum_level_value(problem, l - 1, mode)


def classical_level_value(problem: NestedProblem, l: int) -> float:
    """E g(X, mean of 2^l inner draws)."""
    key = ("classical", l)
    if key in problem._memo:
        return problem._memo[key]
    if problem.inner_mean_law is None:
        raise ValueError(f"problem {problem.name!r} has no exact inner-mean law")
    xs, w = _outer_rule(problem)
    xs = np.asarray(xs, dtype=float)
    values, probs = problem.inner_mean_law(xs, 2**l)
    per_x = np.sum(probs * problem.g(xs[:, None], values), axis=1)
    out = float(np.dot(w, per_x))
    problem._memo[key] = out
    return out


def classical_level_mean(problem: NestedProblem, l: int) -> float:
    """E[Delta_l] of the antithetic sampler; the coarse halves have the law of level l-1."""
    s = classical_level_value(problem, l)
    return s if l == 0 else s - classical_level_value(problem, l - 1)
