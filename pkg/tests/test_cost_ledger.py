import pytest
from hypothesis import given, strategies as st

from qnest.cost_ledger import CSV_COLUMNS, MAX_COUNT, ZERO, CostLedger, merge, merge_all

counts = st.integers(min_value=0, max_value=2**40)
ledgers = st.builds(CostLedger, counts, counts, counts, counts, counts, counts)


def test_total_cost_sums_elementary_counters():
    led = CostLedger(gen_x=1, gen_y=2, phi=3, g=4, quantum_charged=100, classical_charged=7)
    assert led.total_cost == 10


def test_rejects_negative_and_overflow():
    with pytest.raises(ValueError):
        CostLedger(gen_x=-1)
    with pytest.raises(OverflowError):
        CostLedger(phi=MAX_COUNT + 1)


@given(ledgers, ledgers, ledgers)
def test_merge_is_associative_and_commutative(a, b, c):
    assert merge(merge(a, b), c) == merge(a, merge(b, c))
    assert merge(a, b) == merge(b, a)
    assert a + ZERO == a


@given(ledgers, st.integers(min_value=0, max_value=1000))
def test_scale_matches_repeated_merge(a, n):
    assert a.scale(n) == merge_all([a] * n)


@given(ledgers)
def test_row_round_trip(a):
    row = {k: str(v) for k, v in a.as_row().items()}
    assert tuple(row) == CSV_COLUMNS
    assert CostLedger.from_row(row) == a


def test_merge_leaves_inputs_untouched():
    a, b = CostLedger(gen_x=1), CostLedger(g=2)
    merge(a, b)
    assert a == CostLedger(gen_x=1) and b == CostLedger(g=2)
