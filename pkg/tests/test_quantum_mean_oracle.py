import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qnest.cost_ledger import CostLedger
from qnest.bench_cli import fit_loglog_slope
from qnest.quantum_mean_oracle import (MissingTrueMean, OracleMode, Sampler, charge, charged_queries,
                                       mom_group_size, mom_groups, quantum_mean_estimate, scalar_sampler)

SURROGATE = OracleMode.surrogate()


def bernoulli(p=0.5):
    return scalar_sampler(lambda r, n: (r.random(n) < p).astype(float), true_mean=p)


def test_constant_sampler_is_exact():
    s = scalar_sampler(lambda r, n: np.full(n, 0.37), true_mean=0.37)
    est = quantum_mean_estimate(s, 0.0, 0.01, 0.01, SURROGATE, np.random.default_rng(0))
    assert est.value == 0.37


def test_bernoulli_charge_is_twenty():
    est = quantum_mean_estimate(bernoulli(), 0.5, 0.1, 0.1, SURROGATE, np.random.default_rng(0))
    assert est.ledger.quantum_charged == 20
    assert est.ledger.gen_x == 20
    assert est.ledger.classical_charged == mom_groups(0.1) * mom_group_size(0.5, 0.1)


def test_bernoulli_accuracy_rate():
    rng = np.random.default_rng(1)
    hits = sum(abs(quantum_mean_estimate(bernoulli(), 0.5, 0.1, 0.1, SURROGATE, rng).value - 0.5) <= 0.1
               for _ in range(1000))
    assert hits >= 900


def test_adversarial_success_rate():
    rng = np.random.default_rng(2)
    mode = OracleMode.adversarial(0.2, corruption_scale=1.0)
    ok = sum(abs(quantum_mean_estimate(bernoulli(), 0.5, 0.1, 0.1, mode, rng).value - 0.5) <= 0.1
             for _ in range(1000))
    assert abs(ok / 1000 - 0.8) <= 0.04


def test_idealized_needs_true_mean():
    s = scalar_sampler(lambda r, n: r.random(n))
    with pytest.raises(MissingTrueMean):
        quantum_mean_estimate(s, 0.5, 0.1, 0.1, OracleMode.idealized(), np.random.default_rng(0))


def test_idealized_failure_frequency():
    rng = np.random.default_rng(3)
    misses = sum(abs(quantum_mean_estimate(bernoulli(), 0.5, 0.05, 0.2, OracleMode.idealized(), rng).value - 0.5) > 0.05
                 for _ in range(4000))
    assert abs(misses / 4000 - 0.2) < 4 * math.sqrt(0.16 / 4000)


def test_argument_checks():
    with pytest.raises(ValueError):
        quantum_mean_estimate(bernoulli(), 0.5, 0.0, 0.1, SURROGATE, np.random.default_rng(0))
    with pytest.raises(ValueError):
        quantum_mean_estimate(bernoulli(), 0.5, 0.1, 1.0, SURROGATE, np.random.default_rng(0))
    with pytest.raises(ValueError):
        OracleMode.adversarial(1.5)


@given(st.floats(0.01, 10), st.floats(1e-3, 1.0), st.floats(1e-6, 0.99),
       st.integers(1, 50), st.integers(1, 50))
def test_charge_depends_only_on_parameters(sigma, eps, delta, ux, uy):
    unit = CostLedger(gen_x=ux, gen_y=uy)
    a = Sampler(draw=lambda r, n: r.random((1, n)), unit_cost=unit)
    b = Sampler(draw=lambda r, n: 5 + r.standard_normal((1, n)), unit_cost=unit)
    assert charge(a, sigma, eps, delta) == charge(b, sigma, eps, delta)
    nq = charged_queries(sigma, eps, delta)
    assert charge(a, sigma, eps, delta).quantum_charged == nq * (ux + uy)
    assert nq >= 1


def test_quadratic_separation_slopes():
    grid = [2.0**-k for k in range(3, 9)]
    q = [(e, charged_queries(1.0, e, 0.05)) for e in grid]
    c = [(e, mom_groups(0.05) * mom_group_size(1.0, e)) for e in grid]
    assert abs(fit_loglog_slope(q).slope - 1) <= 0.15
    assert abs(fit_loglog_slope(c).slope - 2) <= 0.15


def test_batched_vector_sampler_shapes():
    draw = lambda r, n: r.random((3, n, 2))
    s = Sampler(draw=draw, unit_cost=CostLedger(gen_y=1), batch=3, dim=2,
                true_mean=np.full((3, 2), 0.5))
    est = quantum_mean_estimate(s, 0.5, 0.1, 0.1, SURROGATE, np.random.default_rng(0))
    assert est.value.shape == (3, 2)
    assert np.all(np.abs(est.value - 0.5) < 0.1)
    assert est.ledger.quantum_charged == 3 * 2 * charged_queries(0.5, 0.1, 0.05)
