import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qnest.classical_estimators import (calibrate, classical_level_sample, classical_level_samples,
                                        classical_mlmc_estimate, classical_schedule,
                                        estimate_sequence_params, nested_mc_estimate, plan_schedule)
from qnest.cost_ledger import CostLedger
from qnest.problem_model import GaussianInner, NestedProblem, PointMassInner, make_identity_problem

# planned-cost ratio for (alpha, beta, gamma) = (1, 2, 1), unit constants, eps 2^-6 -> 2^-7,
# evaluated independently in extended precision
BETA_GT_GAMMA_RATIO_AT_2M6 = 4.15217339611


def dyadic_problem(a, b, support):
    """Integer-valued inner draws with affine g, so every operation is exact in floating point."""
    support = np.asarray(support, dtype=float)
    return NestedProblem(
        name="affine", gen_x=lambda r, n: r.integers(0, 4, size=n).astype(float),
        gen_y=lambda r, xs, n: xs[:, None] + r.choice(support, size=(len(xs), n)),
        phi=lambda x, y: y + 0.0 * x, g=lambda x, z: a + b * z + 0.0 * x,
        lipschitz_k=max(abs(b), 1.0), second_moment_v=float((3 + np.abs(support).max()) ** 2),
        outer_variance_s=1.0,
    )


def test_plan_schedule_regimes():
    s = plan_schedule(0.5, 1, 1, 0.01, 1.0, 1.0, 1.0)
    assert s.regime == "beta_eq_gamma" and min(s.replications) >= 1
    assert plan_schedule(1, 2, 1, 0.01, 1, 1, 1).regime == "beta_gt_gamma"
    assert plan_schedule(1, 1, 2, 0.01, 1, 1, 1).regime == "beta_lt_gamma"


def test_plan_schedule_bias_level():
    s = plan_schedule(0.5, 1, 1, 0.05, 2.0, 1.0, 1.0)
    assert 2.0 * 2 ** (-0.5 * s.top_level_L) <= 0.05 / math.sqrt(2) + 1e-15
    assert 2.0 * 2 ** (-0.5 * (s.top_level_L - 1)) > 0.05 / math.sqrt(2)


def test_plan_schedule_variance_budget():
    s = plan_schedule(1, 2, 1, 0.02, 1.0, 3.0, 2.0)
    assert sum(v / n for v, n in zip(s.variances, s.replications)) <= 0.02**2 / 2


def test_plan_schedule_beta_gt_gamma_ratio():
    a = plan_schedule(1, 2, 1, 2.0**-6, 1, 1, 1).planned_cost
    b = plan_schedule(1, 2, 1, 2.0**-7, 1, 1, 1).planned_cost
    assert b / a == pytest.approx(BETA_GT_GAMMA_RATIO_AT_2M6, rel=1e-9)
    for k in (6, 7, 8):
        r = plan_schedule(1, 2, 1, 2.0**-(k + 1), 1, 1, 1).planned_cost / plan_schedule(1, 2, 1, 2.0**-k, 1, 1, 1).planned_cost
        assert abs(r / 4 - 1) <= 0.05


def test_plan_schedule_beta_eq_gamma_log_squared():
    costs = [plan_schedule(0.5, 1, 1, 2.0**-k, 1, 1, 1).planned_cost for k in (8, 12, 16)]
    normalized = [c * 2.0**(-2 * k) / k**2 for c, k in zip(costs, (8, 12, 16))]
    assert max(normalized) / min(normalized) < 1.6


def test_plan_schedule_rejects_bad_inputs():
    with pytest.raises(ValueError):
        plan_schedule(0.5, 1, 1, 0.5, 1, 1, 1)
    with pytest.raises(ValueError):
        plan_schedule(0.4, 1, 1, 0.1, 1, 1, 1)


def test_nested_mc_constant_integrand():
    p = make_identity_problem(PointMassInner(0.25))
    value, ledger = nested_mc_estimate(p, 7, 3, np.random.default_rng(0))
    assert value == 0.25
    assert ledger == CostLedger(gen_x=7, gen_y=21, phi=21, g=7)


def test_nested_mc_single_draw(gauss_toy):
    rng_a, rng_b = np.random.default_rng(5), np.random.default_rng(5)
    value, ledger = nested_mc_estimate(gauss_toy, 1, 1, rng_a)
    x = gauss_toy.gen_x(rng_b, 1)
    y = gauss_toy.gen_y(rng_b, x, 1)
    assert value == pytest.approx(float(gauss_toy.g(x, gauss_toy.inner_phi(x, y)[:, 0])[0]))
    assert ledger == CostLedger(1, 1, 1, 1)


def test_nested_mc_gaussian_identity_error_band():
    p = make_identity_problem(GaussianInner())
    bound = 4 * math.sqrt(p.outer_variance_s / 4096 + p.second_moment_v / 4096)
    hits = sum(abs(nested_mc_estimate(p, 4096, 4096, np.random.default_rng(s))[0] - p.ground_truth) <= bound
               for s in range(100))
    assert hits >= 95


def test_level_zero_ledger(gauss_toy):
    _, ledger = classical_level_sample(gauss_toy, 0, np.random.default_rng(0))
    assert ledger == CostLedger(1, 1, 1, 1)


@given(st.integers(-8, 8), st.integers(-8, 8), st.integers(1, 7), st.integers(0, 2**31))
def test_antithetic_cancellation_is_exact(a, b, l, seed):
    p = dyadic_problem(float(a), float(b), [-2, 0, 1, 3])
    vals, _ = classical_level_samples(p, l, 50, np.random.default_rng(seed))
    assert np.all(vals == 0.0)


def test_linear_g_mlmc_equals_level_zero_mean():
    p = dyadic_problem(0.0, 1.0, [-1, 1])
    cal = calibrate(p, np.random.default_rng(0), replicates=1000)
    assert cal.var_const == 0.0
    value, _ = classical_mlmc_estimate(p, 0.1, np.random.default_rng(1), calibration=cal)
    sched = classical_schedule(p, 0.1, cal)
    rng = np.random.default_rng(1)
    level_rngs = rng.spawn(sched.top_level_L + 1)
    level0, _ = classical_level_samples(p, 0, sched.replications[0], level_rngs[0])
    assert value == float(np.mean(level0))


def test_level_second_moment_bound(gauss_toy):
    K2V = gauss_toy.lipschitz_k**2 * gauss_toy.second_moment_v
    for l in range(1, 7):
        vals, _ = classical_level_samples(gauss_toy, l, 10**5, np.random.default_rng(l))
        assert np.mean(vals**2) <= 2 * K2V * 2.0**-l * 1.2


def test_telescoping_matches_direct_level(gauss_toy):
    l = 4
    rng = np.random.default_rng(7)
    total = sum(classical_level_samples(gauss_toy, k, 10**5, r)[0] for k, r in enumerate(rng.spawn(l + 1)))
    r2 = np.random.default_rng(8)
    xs = gauss_toy.gen_x(r2, 10**5)
    direct = gauss_toy.g(xs, gauss_toy.inner_phi(xs, gauss_toy.gen_y(r2, xs, 2**l)).mean(axis=1))
    se = math.sqrt(np.var(total) / 1e5 + np.var(direct) / 1e5)
    assert abs(total.mean() - direct.mean()) <= 4 * se


def test_bias_decay(gauss_toy):
    bound_const = gauss_toy.lipschitz_k * gauss_toy.root_v
    # the telescoped sum equals the level-l estimator in law (see the test above)
    for l in (2, 4, 6, 8):
        rng = np.random.default_rng(100 + l)
        xs = gauss_toy.gen_x(rng, 2 * 10**4)
        est = gauss_toy.g(xs, gauss_toy.inner_means(rng, xs, 2**l, 1)[:, 0])
        assert abs(est.mean() - gauss_toy.ground_truth) <= bound_const * 2 ** (-l / 2) * 1.5


def test_mlmc_accuracy_on_coc(coc):
    cal = calibrate(coc, np.random.default_rng(0))
    hits = sum(abs(classical_mlmc_estimate(coc, 0.05, np.random.default_rng(s), calibration=cal)[0] - coc.ground_truth) <= 0.05
               for s in range(100))
    assert hits >= 90


def test_mlmc_cost_ratio(gauss_toy):
    cal = calibrate(gauss_toy, np.random.default_rng(0))
    for k in (5, 6):
        a = classical_mlmc_estimate(gauss_toy, 2.0**-k, np.random.default_rng(1), calibration=cal)[1].total_cost
        b = classical_mlmc_estimate(gauss_toy, 2.0**-(k + 1), np.random.default_rng(1), calibration=cal)[1].total_cost
        assert 3.4 <= b / a <= 5.2


def test_mlmc_without_calibration_charges_pilot(gauss_toy):
    v1, led1 = classical_mlmc_estimate(gauss_toy, 0.1, np.random.default_rng(3))
    v2, led2 = classical_mlmc_estimate(gauss_toy, 0.1, np.random.default_rng(3))
    assert (v1, led1) == (v2, led2)
    assert led1.gen_x >= 5000


def test_sequence_params_classical(gauss_toy):
    sampler = lambda l, n, r: classical_level_samples(gauss_toy, l, n, r)
    sp = estimate_sequence_params(sampler, 7, 10**4, np.random.default_rng(0))
    assert abs(sp.alpha - 0.5) <= 0.3 and abs(sp.beta - 1) <= 0.3 and abs(sp.gamma - 1) <= 0.3


def test_sequence_params_deterministic_power_law():
    sampler = lambda l, n, r: (np.full(n, 2.0**-l), CostLedger(gen_y=2**l).scale(n))
    sp = estimate_sequence_params(sampler, 5, 1000, np.random.default_rng(0))
    assert sp.alpha == pytest.approx(1.0, abs=1e-12)
    assert sp.beta is None and "beta" in sp.degenerate
    assert sp.gamma == pytest.approx(1.0, abs=1e-12)


def test_sequence_params_preconditions():
    sampler = lambda l, n, r: (np.zeros(n), CostLedger(g=n))
    with pytest.raises(ValueError):
        estimate_sequence_params(sampler, 2, 1000, np.random.default_rng(0))
    with pytest.raises(ValueError):
        estimate_sequence_params(sampler, 4, 999, np.random.default_rng(0))
