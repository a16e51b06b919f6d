"""Nested-expectation problems E_X[g(X, E[phi(X, Y) | X])] and their constructors.

Every sampler is vectorized: ``gen_x(rng, n)`` returns ``n`` outer points,
``gen_y(rng, xs, n)`` returns an array of shape ``(len(xs), n)`` of
conditional draws, ``phi(x, y)`` and ``g(x, z)`` broadcast.  Vector-valued
inner integrands (EVPPI) append a trailing axis of length ``dim``.

Optional fields give estimators cheaper or exact access to the same laws:

* ``inner_mean_sampler(rng, xs, n, k)`` draws ``k`` independent means of
  ``n`` conditional ``phi`` evaluations per point, exactly in distribution.
* ``inner_mean_law(xs, n)`` returns ``(values, probs)`` of shape ``(B, J)``,
  a discrete law (or fine quadrature) for the mean of ``n`` draws.
* ``outer_rule`` is a quadrature rule (nodes, weights) for the law of X.
* ``g_breakpoints(xs)`` lists the kinks of ``g(x, .)`` for quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Callable, Mapping, Optional

import numpy as np
from scipy import integrate, optimize
from scipy.special import ndtr, ndtri

from .quadrature import composite_rule

Array = np.ndarray


@dataclass(frozen=True, eq=False)
class NestedProblem:
    name: str
    gen_x: Callable[[np.random.Generator, int], Array]
    gen_y: Callable[[np.random.Generator, Array, int], Array]
    phi: Callable[[Array, Array], Array]
    g: Callable[[Array, Array], Array]
    lipschitz_k: float
    second_moment_v: float
    outer_variance_s: float
    dim: int = 1
    conditional_mean: Optional[Callable[[Array], Array]] = None
    ground_truth: Optional[float] = None
    truth_provenance: Optional[str] = None
    truth_resolution: Optional[float] = None
    inner_mean_sampler: Optional[Callable[..., Array]] = None
    inner_mean_law: Optional[Callable[[Array, int], tuple[Array, Array]]] = None
    outer_rule: Optional[tuple[Array, Array]] = None
    g_breakpoints: Optional[Callable[[Array], Array]] = None
    g_kind: str = "generic"
    extras: Mapping[str, Any] = field(default_factory=dict)
    # memo for derived deterministic quantities (exact level means, ...)
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.lipschitz_k > 0:
            raise ValueError("lipschitz_k must be positive")
        if self.second_moment_v < 0 or self.outer_variance_s < 0:
            raise ValueError("second_moment_v and outer_variance_s must be nonnegative")
        object.__setattr__(self, "extras", MappingProxyType(dict(self.extras)))

    @property
    def root_v(self) -> float:
        return math.sqrt(self.second_moment_v)

    def inner_phi(self, xs: Array, ys: Array) -> Array:
        """phi evaluated on a (B, n) block of conditional draws."""
        return self.phi(xs[:, None], ys)

    def inner_means(self, rng: np.random.Generator, xs: Array, n: int, k: int) -> Array:
        """``k`` means of ``n`` conditional phi-draws per point: shape (B, k[, d])."""
        if self.inner_mean_sampler is not None:
            return self.inner_mean_sampler(rng, xs, n, k)
        return _brute_force_means(self, rng, xs, n, k)


def _brute_force_means(problem, rng, xs, n, k, max_block=2**22):
    B = len(xs)
    out = np.empty((B, k) + ((problem.dim,) if problem.dim > 1 else ()))
    # group j of point i uses its own n draws
    per_row = n * k
    rows = max(1, max_block // max(per_row, 1))
    for s in range(0, B, rows):
        xb = xs[s:s + rows]
        if per_row <= max_block:
            ys = problem.gen_y(rng, xb, per_row)
            vals = problem.inner_phi(xb, ys)
            vals = vals.reshape((len(xb), k, n) + vals.shape[2:])
            out[s:s + rows] = vals.mean(axis=2)
        else:
            for j in range(k):
                acc = 0.0
                left = n
                while left > 0:
                    c = min(left, max_block)
                    ys = problem.gen_y(rng, xb, c)
                    acc = acc + problem.inner_phi(xb, ys).sum(axis=1)
                    left -= c
                out[s:s + rows, j] = acc / n
    return out


# ---------------------------------------------------------------------------
# inner-law specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointMassInner:
    """Y | X = x is a point mass at ``value`` (X is irrelevant, fixed to 0)."""
    value: float


@dataclass(frozen=True)
class BernoulliInner:
    """Y | X = x ~ Bernoulli(p), independent of x."""
    p: float = 0.5


@dataclass(frozen=True)
class GaussianInner:
    """X ~ N(0, 1) truncated to [x_low, x_high]; Y | X = x ~ N(x, noise_sd^2)."""
    x_low: float = -3.0
    x_high: float = 3.0
    noise_sd: float = 1.0


@dataclass(frozen=True)
class CocJoint:
    """X ~ U[x_low, x_high]; Y | X = x is uniform on [x + lo, x + hi] or two-point {x + lo, x + hi}."""
    x_low: float
    x_high: float
    y_law: str = "uniform"
    y_low_offset: float = 0.0
    y_high_offset: float = 0.0
    p_high: float = 0.5


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------

def _zeros_x(rng, n):
    return np.zeros(n)


def _identity_g(x, z):
    return np.asarray(z, dtype=float) + 0.0 * x


def _point_law(values):
    values = np.asarray(values, dtype=float)
    return values[:, None], np.ones((len(values), 1))


def _binomial_law(lo, hi, p, n, width=12.0):
    """Law of lo + (hi - lo) * Binomial(n, p) / n, truncated to +-width sd."""
    from scipy.stats import binom
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    p = np.broadcast_to(np.asarray(p, dtype=float), lo.shape)
    sd = math.sqrt(n * 0.25)
    half = int(math.ceil(width * sd)) + 1
    centre = np.floor(n * p).astype(int)
    offsets = np.arange(-half, half + 1)
    j = centre[:, None] + offsets[None, :]
    valid = (j >= 0) & (j <= n)
    jc = np.clip(j, 0, n)
    probs = np.where(valid, binom.pmf(jc, n, p[:, None]), 0.0)
    probs /= probs.sum(axis=1, keepdims=True)
    values = lo[:, None] + (hi - lo)[:, None] * jc / n
    return values, probs


_NORMAL_T = np.linspace(-10.0, 10.0, 2001)
_NORMAL_P = np.diff(ndtr(np.concatenate([[-np.inf], 0.5 * (_NORMAL_T[1:] + _NORMAL_T[:-1]), [np.inf]])))


def _normal_law(mean, sd):
    mean = np.asarray(mean, dtype=float)
    values = mean[:, None] + sd * _NORMAL_T[None, :]
    probs = np.broadcast_to(_NORMAL_P, values.shape)
    return values, probs


def _truncnorm_sampler(lo, hi):
    plo, phi_ = ndtr(lo), ndtr(hi)

    def sample(rng, n):
        u = rng.uniform(plo, phi_, size=n)
        return np.clip(ndtri(u), lo, hi)
    return sample


def _truncnorm_rule(lo, hi, panels=80, order=10):
    nodes, w = composite_rule(lo, hi, panels, order)
    dens = np.exp(-0.5 * nodes**2)
    w = w * dens
    return nodes, w / w.sum()


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def make_identity_problem(inner_distribution_spec, name: str = "identity") -> NestedProblem:
    """g(x, z) = z, so the nested expectation reduces to E[phi]."""
    spec = inner_distribution_spec
    if isinstance(spec, PointMassInner):
        c = float(spec.value)
        return NestedProblem(
            name=name, gen_x=_zeros_x,
            gen_y=lambda rng, xs, n: np.full((len(xs), n), c),
            phi=lambda x, y: np.asarray(y, dtype=float) + 0.0 * x,
            g=_identity_g, lipschitz_k=1.0, second_moment_v=c * c, outer_variance_s=0.0,
            conditional_mean=lambda xs: np.full(np.shape(xs), c),
            ground_truth=c, truth_provenance="closed-form", truth_resolution=0.0,
            inner_mean_sampler=lambda rng, xs, n, k: np.full((len(xs), k), c),
            inner_mean_law=lambda xs, n: _point_law(np.full(len(xs), c)),
            outer_rule=(np.zeros(1), np.ones(1)),
        )
    if isinstance(spec, BernoulliInner):
        p = float(spec.p)
        if not 0.0 <= p <= 1.0:
            raise ValueError("Bernoulli p must lie in [0, 1]")
        return NestedProblem(
            name=name, gen_x=_zeros_x,
            gen_y=lambda rng, xs, n: (rng.random((len(xs), n)) < p).astype(float),
            phi=lambda x, y: np.asarray(y, dtype=float) + 0.0 * x,
            g=_identity_g, lipschitz_k=1.0, second_moment_v=1.0, outer_variance_s=0.0,
            conditional_mean=lambda xs: np.full(np.shape(xs), p),
            ground_truth=p, truth_provenance="closed-form", truth_resolution=0.0,
            inner_mean_sampler=lambda rng, xs, n, k: rng.binomial(n, p, size=(len(xs), k)) / n,
            inner_mean_law=lambda xs, n: _binomial_law(np.zeros(len(xs)), np.ones(len(xs)), p, n),
            outer_rule=(np.zeros(1), np.ones(1)),
        )
    if isinstance(spec, GaussianInner):
        lo, hi, sd = spec.x_low, spec.x_high, spec.noise_sd
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi and sd >= 0):
            raise ValueError("Gaussian inner spec needs a finite truncation interval and sd >= 0")
        nodes, w = _truncnorm_rule(lo, hi)
        mean_x = float(np.dot(w, nodes))
        var_x = float(np.dot(w, (nodes - mean_x) ** 2))
        return NestedProblem(
            name=name, **_gaussian_pieces(lo, hi, sd),
            g=_identity_g, lipschitz_k=1.0,
            second_moment_v=max(lo * lo, hi * hi) + sd * sd, outer_variance_s=var_x,
            ground_truth=mean_x, truth_provenance="quadrature", truth_resolution=1e-12,
            outer_rule=(nodes, w),
        )
    raise TypeError(f"unsupported inner distribution spec {spec!r}")


def _gaussian_pieces(lo, hi, sd):
    return dict(
        gen_x=_truncnorm_sampler(lo, hi),
        gen_y=lambda rng, xs, n: xs[:, None] + sd * rng.standard_normal((len(xs), n)),
        phi=lambda x, y: np.asarray(y, dtype=float) + 0.0 * x,
        conditional_mean=lambda xs: np.asarray(xs, dtype=float),
        inner_mean_sampler=lambda rng, xs, n, k: xs[:, None] + (sd / math.sqrt(n)) * rng.standard_normal((len(xs), k)),
        inner_mean_law=lambda xs, n: _normal_law(xs, sd / math.sqrt(n)),
    )


def make_gauss_toy(x_low: float = -3.0, x_high: float = 3.0, noise_sd: float = 1.0) -> NestedProblem:
    """Gaussian toy whose outer function has its kink exactly at the inner mean.

    X ~ N(0, 1) truncated, Y | X = x ~ N(x, sd^2), phi = y and
    g(x, z) = x^2 + |z - x|.  Because gamma(x) = x sits on the kink of
    g(x, .), the classical and quantum level sequences show their worst-case
    Lipschitz rates rather than the faster smooth-g rates.
    """
    nodes, w = _truncnorm_rule(x_low, x_high)
    m2 = float(np.dot(w, nodes**2))
    s = float(np.dot(w, (nodes**2 - m2) ** 2))
    return NestedProblem(
        name="gauss-toy", **_gaussian_pieces(x_low, x_high, noise_sd),
        g=lambda x, z: x * x + np.abs(z - x),
        lipschitz_k=1.0, second_moment_v=max(x_low**2, x_high**2) + noise_sd**2,
        outer_variance_s=s, ground_truth=m2, truth_provenance="quadrature", truth_resolution=1e-12,
        outer_rule=(nodes, w), g_breakpoints=lambda xs: np.asarray(xs, dtype=float)[:, None],
    )


def _coc_gamma(joint: CocJoint, k: float):
    lo_off, hi_off = joint.y_low_offset, joint.y_high_offset
    if joint.y_law == "two_point":
        p = joint.p_high

        def gamma(xs):
            xs = np.asarray(xs, dtype=float)
            return (1 - p) * np.maximum(xs + lo_off - k, 0.0) + p * np.maximum(xs + hi_off - k, 0.0)
        return gamma
    width = hi_off - lo_off

    def gamma(xs):
        xs = np.asarray(xs, dtype=float)
        u0, u1 = xs + lo_off, xs + hi_off
        if width == 0:
            return np.maximum(u0 - k, 0.0)
        full = 0.5 * (u0 + u1) - k
        part = np.clip(u1 - k, 0.0, None) ** 2 / (2 * width)
        return np.where(k <= u0, full, part)
    return gamma


def make_coc_option(a: float, b: float, strike_k: float, joint_spec: CocJoint) -> NestedProblem:
    """Call-on-a-call option: g(x, z) = max(z - k, 0), phi(x, y) = max(y - k, 0)."""
    j = joint_spec
    vals = [a, b, strike_k, j.x_low, j.x_high, j.y_low_offset, j.y_high_offset]
    if not all(np.isfinite(v) for v in vals):
        raise ValueError("CoC joint spec must be bounded")
    if a < 0 or b < 0 or strike_k <= 0:
        raise ValueError("need a, b >= 0 and strike_k > 0")
    if j.y_law not in ("uniform", "two_point"):
        raise ValueError(f"unknown y_law {j.y_law!r}")
    if not (j.x_low <= j.x_high and j.y_low_offset <= j.y_high_offset):
        raise ValueError("empty support")
    lo_support = min(j.x_low, j.x_low + j.y_low_offset)
    hi_support = max(j.x_high, j.x_high + j.y_high_offset)
    if lo_support < -a - 1e-12 or hi_support > b + 1e-12:
        raise ValueError(f"joint support [{lo_support}, {hi_support}] not inside [-a, b] = [{-a}, {b}]")
    k = float(strike_k)
    bound = max(b - k, a + k) ** 2
    gamma = _coc_gamma(j, k)
    lo_off, hi_off = j.y_low_offset, j.y_high_offset

    if j.y_law == "two_point":
        p = j.p_high

        def gen_y(rng, xs, n):
            up = rng.random((len(xs), n)) < p
            return xs[:, None] + np.where(up, hi_off, lo_off)

        def mean_sampler(rng, xs, n, kk):
            lo_v = np.maximum(xs + lo_off - k, 0.0)[:, None]
            hi_v = np.maximum(xs + hi_off - k, 0.0)[:, None]
            frac = rng.binomial(n, p, size=(len(xs), kk)) / n
            return lo_v + (hi_v - lo_v) * frac

        def mean_law(xs, n):
            xs = np.asarray(xs, dtype=float)
            return _binomial_law(np.maximum(xs + lo_off - k, 0.0), np.maximum(xs + hi_off - k, 0.0), p, n)
    else:
        def gen_y(rng, xs, n):
            return xs[:, None] + rng.uniform(lo_off, hi_off, size=(len(xs), n))
        mean_sampler = mean_law = None
        if lo_off == hi_off:
            def mean_sampler(rng, xs, n, kk):
                return np.repeat(gamma(xs)[:, None], kk, axis=1)

            def mean_law(xs, n):
                return _point_law(gamma(xs))

    # kinks of lambda(x) = max(gamma(x) - k, 0) for the truth integral
    breaks = [k - lo_off, k - hi_off]
    if j.x_low < j.x_high:
        f = lambda x: float(gamma(np.array([x]))[0]) - k
        if f(j.x_low) < 0 < f(j.x_high):
            breaks.append(optimize.brentq(f, j.x_low, j.x_high, xtol=1e-14))
        lam = lambda x: max(float(gamma(np.array([x]))[0]) - k, 0.0)
        pts = sorted(x for x in breaks if j.x_low < x < j.x_high)
        val, err = integrate.quad(lam, j.x_low, j.x_high, points=pts or None, epsabs=1e-13, epsrel=1e-13, limit=200)
        truth = val / (j.x_high - j.x_low)
        rule = composite_rule(j.x_low, j.x_high, 200, 8, breakpoints=pts)
        rule = (rule[0], rule[1] / rule[1].sum())
        gen_x = lambda rng, n: rng.uniform(j.x_low, j.x_high, size=n)
    else:
        truth = max(float(gamma(np.array([j.x_low]))[0]) - k, 0.0)
        rule = (np.array([j.x_low]), np.ones(1))
        gen_x = lambda rng, n: np.full(n, j.x_low)

    return NestedProblem(
        name="coc", gen_x=gen_x, gen_y=gen_y,
        phi=lambda x, y: np.maximum(y - k, 0.0) + 0.0 * x,
        g=lambda x, z: np.maximum(z - k, 0.0) + 0.0 * x,
        lipschitz_k=1.0, second_moment_v=bound, outer_variance_s=bound,
        conditional_mean=gamma, ground_truth=truth, truth_provenance="quadrature",
        truth_resolution=1e-12, inner_mean_sampler=mean_sampler, inner_mean_law=mean_law,
        outer_rule=rule, g_breakpoints=lambda xs: np.full((len(xs), 1), k),
        extras={"a": a, "b": b, "strike": k, "joint": j},
    )


def make_bayes_design_toy(num_x: int, num_y: int, likelihood_table, floor_c: float,
                          y_marginal=None) -> NestedProblem:
    """First term E_X[log E_Y[P(X | Y)]] of the expected information loss.

    ``likelihood_table[x][y] = P(X = x | Y = y)``; each column is a
    distribution over x.  The inner expectation is over the marginal of Y,
    so Gen_Y ignores x.  g uses the Lipschitz extension log(max(z, c)),
    which agrees with log z wherever the true inner mean can lie.
    """
    table = np.asarray(likelihood_table, dtype=float)
    if table.shape != (num_x, num_y):
        raise ValueError(f"table shape {table.shape} != ({num_x}, {num_y})")
    if not 0 < floor_c < 1:
        raise ValueError("floor_c must lie in (0, 1)")
    if np.any(table < floor_c - 1e-12) or np.any(table > 1 + 1e-12):
        raise ValueError("every table entry must lie in [floor_c, 1]")
    if not np.allclose(table.sum(axis=0), 1.0, atol=1e-9):
        raise ValueError("each column P(. | Y = y) must sum to 1")
    py = np.full(num_y, 1.0 / num_y) if y_marginal is None else np.asarray(y_marginal, dtype=float)
    if py.shape != (num_y,) or np.any(py < 0) or not np.isclose(py.sum(), 1.0):
        raise ValueError("y_marginal must be a distribution over num_y outcomes")
    px = table @ py
    c = float(floor_c)

    def gen_y(rng, xs, n):
        return rng.choice(num_y, size=(len(xs), n), p=py)

    def phi(x, y):
        return table[np.asarray(x, dtype=int), np.asarray(y, dtype=int)]

    def mean_sampler(rng, xs, n, k):
        counts = rng.multinomial(n, py, size=(len(xs), k))
        return np.einsum("bkj,bj->bk", counts, table[xs.astype(int)]) / n

    mean_law = None
    if num_y <= 2:
        def mean_law(xs, n):
            rows = table[np.asarray(xs, dtype=int)]
            if num_y == 1:
                return _point_law(rows[:, 0])
            return _binomial_law(rows[:, 0], rows[:, 1], py[1], n)

    truth = float(np.sum(px * np.log(px)))
    return NestedProblem(
        name="bayes", gen_x=lambda rng, n: rng.choice(num_x, size=n, p=px).astype(float),
        gen_y=gen_y, phi=phi, g=lambda x, z: np.log(np.maximum(z, c)) + 0.0 * x,
        lipschitz_k=1.0 / c, second_moment_v=1.0, outer_variance_s=math.log(c) ** 2,
        conditional_mean=lambda xs: px[np.asarray(xs, dtype=int)],
        ground_truth=truth, truth_provenance="enumeration", truth_resolution=0.0,
        inner_mean_sampler=mean_sampler, inner_mean_law=mean_law,
        outer_rule=(np.arange(num_x, dtype=float), px),
        g_breakpoints=lambda xs: np.full((len(xs), 1), c),
        extras={"table": table, "y_marginal": py, "x_marginal": px},
    )


def make_evppi_discrete(d: int, num_x: int, payoff_tables, bound_v: float,
                        x_probs=None, y_given_x=None) -> NestedProblem:
    """First EVPPI term E_X[max_k E[f_k(X, Y) | X]] for finite X and Y.

    ``payoff_tables[k][x][y] = f_k(x, y)``.  The second term
    max_k E[f_k] and the EVPPI itself are stored in ``extras``.
    """
    f = np.asarray(payoff_tables, dtype=float)
    if f.ndim != 3 or f.shape[0] != d or f.shape[1] != num_x or d < 1:
        raise ValueError("payoff_tables must have shape (d, num_x, num_y)")
    if not np.all(np.isfinite(f)) or np.any(np.abs(f) > math.sqrt(bound_v) + 1e-12):
        raise ValueError("payoffs must satisfy |f_k| <= sqrt(bound_v)")
    num_y = f.shape[2]
    px = np.full(num_x, 1.0 / num_x) if x_probs is None else np.asarray(x_probs, dtype=float)
    pyx = np.full((num_x, num_y), 1.0 / num_y) if y_given_x is None else np.asarray(y_given_x, dtype=float)
    if not np.isclose(px.sum(), 1.0) or not np.allclose(pyx.sum(axis=1), 1.0):
        raise ValueError("x_probs and y_given_x rows must be distributions")
    fxy = np.moveaxis(f, 0, -1)            # (num_x, num_y, d)
    gam = np.einsum("xy,xyd->xd", pyx, fxy)
    term1 = float(px @ gam.max(axis=1))
    term2 = float((px @ gam).max())
    cdf = np.cumsum(pyx, axis=1)

    def gen_y(rng, xs, n):
        u = rng.random((len(xs), n))
        c = cdf[xs.astype(int)]
        return np.minimum((u[:, :, None] > c[:, None, :]).sum(axis=2), num_y - 1)

    def phi(x, y):
        return fxy[np.asarray(x, dtype=int), np.asarray(y, dtype=int)]

    def mean_sampler(rng, xs, n, k):
        idx = xs.astype(int)
        counts = rng.multinomial(n, pyx[idx][:, None, :], size=(len(xs), k))
        return np.einsum("bky,byd->bkd", counts, fxy[idx]) / n

    vector = d > 1
    return NestedProblem(
        name="evppi", gen_x=lambda rng, n: rng.choice(num_x, size=n, p=px).astype(float),
        gen_y=gen_y, phi=phi if vector else (lambda x, y: phi(x, y)[..., 0]),
        g=(lambda x, z: np.max(z, axis=-1)) if vector else (lambda x, z: np.asarray(z, dtype=float) + 0.0 * x),
        lipschitz_k=1.0, second_moment_v=float(bound_v), outer_variance_s=float(bound_v), dim=d,
        conditional_mean=(lambda xs: gam[np.asarray(xs, dtype=int)]) if vector else (lambda xs: gam[np.asarray(xs, dtype=int), 0]),
        ground_truth=term1, truth_provenance="enumeration", truth_resolution=0.0,
        inner_mean_sampler=mean_sampler if vector else (lambda rng, xs, n, k: mean_sampler(rng, xs, n, k)[..., 0]),
        outer_rule=(np.arange(num_x, dtype=float), px),
        g_kind="max" if vector else "generic",
        extras={"second_term": term2, "evppi": term1 - term2, "conditional_means": gam},
    )


# ---------------------------------------------------------------------------
# named problems and the ground-truth sidecar
# ---------------------------------------------------------------------------

DEFAULT_COC = dict(a=0.0, b=4.0, strike_k=1.0,
                   joint_spec=CocJoint(0.0, 2.0, "two_point", 0.0, 2.0))
DEFAULT_BAYES = dict(num_x=2, num_y=2, likelihood_table=[[0.7, 0.4], [0.3, 0.6]], floor_c=0.3)
DEFAULT_EVPPI = dict(
    d=2, num_x=3,
    payoff_tables=[[[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]],
                   [[0.2, 0.6], [0.4, 0.4], [0.9, 0.3]]],
    bound_v=1.0,
)


def _build(name: str) -> NestedProblem:
    if name == "identity":
        return make_identity_problem(GaussianInner())
    if name == "gauss-toy":
        return make_gauss_toy()
    if name == "coc":
        return make_coc_option(**DEFAULT_COC)
    if name == "bayes":
        return make_bayes_design_toy(**DEFAULT_BAYES)
    if name == "evppi":
        return make_evppi_discrete(**DEFAULT_EVPPI)
    raise KeyError(name)


PROBLEMS = ("coc", "bayes", "evppi", "identity", "gauss-toy")


def truth_path(name: str, root) -> Path:
    return Path(root) / f"{name}.truth"


def write_truth(problem: NestedProblem, root) -> Path:
    path = truth_path(problem.name, root)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(f"{problem.ground_truth!r} {problem.truth_resolution!r} {problem.truth_provenance}\n")
    return path


def read_truth(name: str, root) -> tuple[float, float, str]:
    value, resolution, provenance = truth_path(name, root).read_text().split()
    return float(value), float(resolution), provenance


def get_problem(name: str, cache_dir=None) -> NestedProblem:
    """Named problem; with ``cache_dir`` the ground truth goes through ``<name>.truth``."""
    if name not in PROBLEMS:
        raise KeyError(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}")
    problem = _build(name)
    if cache_dir is None:
        return problem
    path = truth_path(name, cache_dir)
    if not path.exists():
        write_truth(problem, cache_dir)
        return problem
    value, resolution, provenance = read_truth(name, cache_dir)
    from dataclasses import replace
    return replace(problem, ground_truth=value, truth_resolution=resolution,
                   truth_provenance=provenance, _memo={})
