"""Market model, validators, compression application, clearing checker."""

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netclear import fixtures
from netclear.errors import InvalidCompressionError
from netclear.market import (
    PRIORITY,
    PROPORTIONAL,
    ClearingVector,
    Compression,
    DefaultReport,
    FinancialMarket,
    apply_compression,
    check_clearing,
    compression_violations,
    cycle_indicator,
    full_payment,
    income_def,
    income_nondef,
    is_bilateral,
    is_compression,
    is_cycle_compression,
    validate,
)
from netclear.rational import format_rational, parse_rational


def with_liability(market, i, j, value):
    rows = [list(r) for r in market.liabilities]
    rows[i][j] = F(value)
    return market.with_liabilities(rows)


class TestValidate:
    def test_fixtures_valid(self):
        for name in fixtures.FIXTURES:
            assert validate(fixtures.fixture(name)) == [], name

    def test_diagonal_violation(self, ring3):
        bad = with_liability(ring3, 0, 0, 1)
        assert any("diag-nonzero at (0,0)" in v for v in validate(bad))

    def test_negative_liability(self, ring3):
        bad = with_liability(ring3, 0, 1, -1)
        assert any("negative-liability" in v for v in validate(bad))

    def test_priority_partition_violation(self, ring3):
        broken = FinancialMarket(
            ring3.names,
            ring3.liabilities,
            ring3.endowments,
            ring3.alpha,
            ring3.beta,
            ((), ((2,),), ((0,),)),  # bank 0 missing creditor 1
        )
        problems = validate(broken)
        assert any("priority-partition violation at bank 0" in v for v in problems)

    def test_alpha_out_of_range(self, ring3):
        bad = FinancialMarket(
            ring3.names,
            ring3.liabilities,
            ring3.endowments,
            (F(2), F(1), F(1)),
            ring3.beta,
            ring3.priorities,
        )
        assert any("alpha-out-of-range" in v for v in validate(bad))


class TestCompression:
    def test_full_ring_compression(self, ring3):
        c = cycle_indicator(3, [0, 1, 2], F(1))
        assert is_compression(ring3, c)
        assert is_cycle_compression(ring3, c)
        assert not is_bilateral(c)
        out = apply_compression(ring3, c)
        assert all(v == 0 for row in out.liabilities for v in row)
        assert out.priorities == ((), (), ())

    def test_flow_condition_violation(self, ring3):
        c = Compression.create([[0, 1, 0], [0, 0, 0], [0, 0, 0]])
        problems = compression_violations(ring3, c)
        assert any("flow-condition violated at bank 0" in v for v in problems)
        assert any("flow-condition violated at bank 1" in v for v in problems)
        with pytest.raises(InvalidCompressionError):
            apply_compression(ring3, c)

    def test_half_ring(self, ring3):
        c = cycle_indicator(3, [0, 1, 2], F(1, 2))
        out = apply_compression(ring3, c)
        assert out.liabilities[0][1] == F(1, 2)
        assert out.priorities[0] == ((1,),)

    def test_two_cycle_is_bilateral(self):
        m = FinancialMarket.create(["a", "b"], [[0, 1], [1, 0]], [0, 0])
        c = Compression.create([[0, 1], [1, 0]])
        assert is_compression(m, c)
        assert is_bilateral(c)
        assert is_cycle_compression(m, c)

    def test_two_out_arcs_not_cycle_compression(self):
        m = FinancialMarket.create(
            ["a", "b", "c"],
            [[0, 2, 2], [2, 0, 0], [2, 0, 0]],
            [0, 0, 0],
        )
        c = Compression.create([[0, 1, 1], [1, 0, 0], [1, 0, 0]])
        assert is_compression(m, c)
        assert not is_cycle_compression(m, c)

    def test_exceeds_liability(self, ring3):
        c = cycle_indicator(3, [0, 1, 2], F(2))
        assert any("exceeds-liability" in v for v in compression_violations(ring3, c))


class TestIncomes:
    def test_full_ring_income(self, ring3):
        p = full_payment(ring3)
        assert income_nondef(ring3, p, 0) == 1

    def test_negative_endowment_only(self):
        m = FinancialMarket.create(["a"], [[0]], [-1])
        p = ClearingVector.create([[0]])
        assert income_nondef(m, p, 0) == -1

    def test_default_income_haircuts(self):
        m = FinancialMarket.create(
            ["a", "b"], [[0, 0], [4, 0]], [2, 0], alpha=[F(1, 2), 1], beta=[F(1, 2), 1]
        )
        p = ClearingVector.create([[0, 0], [4, 0]])
        assert income_def(m, p, 0) == 3  # 1/2 * 2 + 1/2 * 4


class TestCheckClearing:
    def test_chain_partial_payment(self, chain):
        p = ClearingVector.create([[0, 1], [0, 0]])
        report = check_clearing(chain, p, PROPORTIONAL)
        assert isinstance(report, DefaultReport)
        assert report.defaulting == {0}

    def test_chain_overpayment_flagged(self, chain):
        p = ClearingVector.create([[0, 2], [0, 0]])
        result = check_clearing(chain, p, PROPORTIONAL)
        assert isinstance(result, list)
        assert any("bank 0" in v for v in result)

    def test_priority_rule(self, prio):
        p = ClearingVector.create([[0, 1, 0], [0, 0, 0], [0, 0, 0]])
        report = check_clearing(prio, p, PRIORITY)
        assert isinstance(report, DefaultReport)
        assert report.defaulting == {0}

    def test_priority_wrong_split_flagged(self, prio):
        p = ClearingVector.create([[0, F(1, 2), F(1, 2)], [0, 0, 0], [0, 0, 0]])
        result = check_clearing(prio, p, PRIORITY)
        assert isinstance(result, list)

    def test_proportional_agrees_with_single_group_priority(self, twocycle):
        p = ClearingVector.create([[0, 0, 0, 0]] * 4)
        rep_prop = check_clearing(twocycle, p, PROPORTIONAL)
        rep_prio = check_clearing(twocycle, p, PRIORITY)
        assert isinstance(rep_prop, DefaultReport) and isinstance(rep_prio, DefaultReport)
        assert rep_prop.defaulting == rep_prio.defaulting

    def test_no_liability_bank_solvent_with_negative_endowment(self):
        m = FinancialMarket.create(["a"], [[0]], [-5])
        p = ClearingVector.create([[0]])
        report = check_clearing(m, p, PROPORTIONAL)
        assert isinstance(report, DefaultReport)
        assert report.defaulting == frozenset()


small_value = st.integers(min_value=0, max_value=4).map(F)


@st.composite
def market_and_cycles(draw):
    n = draw(st.integers(min_value=2, max_value=5))
    liab = [[F(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j:
                liab[i][j] = draw(small_value)
    endow = [draw(small_value) for _ in range(n)]
    market = FinancialMarket.create([f"b{i}" for i in range(n)], liab, endow)
    k = draw(st.integers(min_value=2, max_value=n))
    cycle = draw(st.permutations(range(n)).map(lambda p: list(p)[:k]))
    return market, cycle


@given(market_and_cycles())
@settings(max_examples=120, deadline=None)
def test_cycle_compression_preserves_net_positions(case):
    market, cycle = case
    eps = min(
        market.liabilities[i][cycle[(k + 1) % len(cycle)]] for k, i in enumerate(cycle)
    )
    c = cycle_indicator(market.n, cycle, eps)
    if not is_compression(market, c):
        return
    out = apply_compression(market, c)
    for i in range(market.n):
        before = sum(market.liabilities[i], F(0)) - sum(
            market.liabilities[j][i] for j in range(market.n)
        )
        after = sum(out.liabilities[i], F(0)) - sum(
            out.liabilities[j][i] for j in range(market.n)
        )
        assert before == after
        for j in range(market.n):
            assert out.liabilities[i][j] <= market.liabilities[i][j]
            if market.liabilities[i][j] == 0:
                assert out.liabilities[i][j] == 0


@given(st.fractions(max_denominator=1000))
@settings(max_examples=200, deadline=None)
def test_rational_round_trip(value):
    assert parse_rational(format_rational(value)) == value
