import math

import numpy as np
import pytest

from qnest.problem_model import (BernoulliInner, CocJoint, GaussianInner, PointMassInner, PROBLEMS,
                                 get_problem, make_bayes_design_toy, make_coc_option,
                                 make_evppi_discrete, make_identity_problem, read_truth)

# truncated N(0,1) on [-3, 3], evaluated independently with mpmath
GAUSS_SECOND_MOMENT = 0.97333692466254148
GAUSS_VAR_OF_SQUARE = 1.7326583270389638


def test_identity_point_mass_constants():
    p = make_identity_problem(PointMassInner(0.75))
    assert p.second_moment_v == pytest.approx(0.5625)
    assert p.outer_variance_s == 0.0
    assert p.ground_truth == 0.75


def test_identity_bernoulli_constants():
    p = make_identity_problem(BernoulliInner(0.5))
    assert (p.lipschitz_k, p.second_moment_v, p.ground_truth) == (1.0, 1.0, 0.5)


def test_gaussian_identity_truth_and_moments():
    p = make_identity_problem(GaussianInner())
    assert abs(p.ground_truth) < 1e-12
    assert p.second_moment_v == 10.0
    assert p.outer_variance_s == pytest.approx(GAUSS_SECOND_MOMENT, abs=1e-10)


def test_gauss_toy_truth_matches_closed_form(gauss_toy):
    assert gauss_toy.ground_truth == pytest.approx(GAUSS_SECOND_MOMENT, abs=1e-10)
    assert gauss_toy.outer_variance_s == pytest.approx(GAUSS_VAR_OF_SQUARE, abs=1e-9)


def test_coc_default_truth(coc):
    # lambda(x) = max(x - 1, 0) for X ~ U[0, 2]
    assert coc.ground_truth == pytest.approx(0.25, abs=1e-12)
    assert coc.second_moment_v == 9.0 and coc.lipschitz_k == 1.0


def test_coc_uniform_conditional_truth_against_monte_carlo():
    p = make_coc_option(0.0, 4.0, 1.0, CocJoint(0.0, 2.0, "uniform", 0.0, 2.0))
    rng = np.random.default_rng(0)
    xs = p.gen_x(rng, 200000)
    lam = np.maximum(p.conditional_mean(xs) - 1.0, 0.0)
    assert abs(lam.mean() - p.ground_truth) < 4 * lam.std() / math.sqrt(len(xs))


def test_coc_conditional_mean_matches_samples(coc, rng):
    xs = np.array([0.3, 1.0, 1.7])
    ys = coc.gen_y(rng, xs, 200000)
    emp = coc.inner_phi(xs, ys).mean(axis=1)
    assert np.allclose(emp, coc.conditional_mean(xs), atol=0.02)


def test_coc_rejects_unbounded_or_outside_support():
    with pytest.raises(ValueError):
        make_coc_option(0.0, 4.0, 1.0, CocJoint(0.0, np.inf, "uniform", 0.0, 1.0))
    with pytest.raises(ValueError):
        make_coc_option(0.0, 2.0, 1.0, CocJoint(0.0, 2.0, "uniform", 0.0, 2.0))


def test_bayes_truth_is_entropy_term():
    p = get_problem("bayes")
    px = np.array([0.55, 0.45])
    assert p.ground_truth == pytest.approx(float(np.sum(px * np.log(px))), abs=1e-14)
    assert p.lipschitz_k == pytest.approx(1 / 0.3)


def test_bayes_rejects_non_distribution_columns():
    with pytest.raises(ValueError):
        make_bayes_design_toy(2, 2, [[0.7, 0.7], [0.3, 0.4]], 0.3)


def test_evppi_truth_and_extras():
    p = get_problem("evppi")
    assert p.ground_truth == pytest.approx((0.5 + 0.5 + 0.6) / 3)
    assert p.extras["second_term"] == pytest.approx(max((0.5 + 0.5 + 0.5) / 3, (0.4 + 0.4 + 0.6) / 3))
    assert p.extras["evppi"] == pytest.approx(p.ground_truth - p.extras["second_term"])


def test_evppi_rejects_payoff_above_bound():
    with pytest.raises(ValueError):
        make_evppi_discrete(1, 1, [[[2.0, 0.0]]], bound_v=1.0)


@pytest.mark.parametrize("name", ["gauss-toy", "coc", "bayes", "evppi"])
def test_fast_inner_means_match_brute_force(name, rng):
    p = get_problem(name)
    xs = p.gen_x(rng, 4)
    fast = p.inner_means(rng, xs, 16, 20000)
    ys = p.gen_y(rng, np.repeat(xs, 2000), 16)
    brute = p.inner_phi(np.repeat(xs, 2000), ys).mean(axis=1).reshape((4, 2000) + fast.shape[2:])
    assert np.allclose(fast.mean(axis=1), brute.mean(axis=1), atol=0.03)
    assert np.allclose(fast.std(axis=1), brute.std(axis=1), atol=0.03)


def test_truth_sidecar_round_trip(tmp_path):
    p = get_problem("coc", cache_dir=tmp_path)
    value, resolution, provenance = read_truth("coc", tmp_path)
    assert value == p.ground_truth and provenance == "quadrature"
    again = get_problem("coc", cache_dir=tmp_path)
    assert again.ground_truth == p.ground_truth


def test_unknown_problem_name():
    with pytest.raises(KeyError):
        get_problem("nope")
    assert set(PROBLEMS) >= {"coc", "gauss-toy", "identity"}
