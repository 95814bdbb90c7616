"""Greedy cycle canceling, acyclic reduction, and the one-default deciders."""

from fractions import Fraction as F

import pytest

from genutil import random_market, rng_for
from netclear import fixtures
from netclear.clearing import clear_priority_proportional, clear_proportional
from netclear.compressflow import (
    FlowNetwork,
    flow_lp,
    greedy_compress,
    reduce_to_acyclic,
    save_all_but_one,
)
from netclear.errors import NegativeEndowmentError
from netclear.market import (
    PRIORITY,
    PROPORTIONAL,
    DefaultReport,
    FinancialMarket,
    apply_compression,
    check_clearing,
    defaulting_set,
    is_compression,
)
from netclear.milp import optimal_compress


def _has_cycle(market) -> bool:
    n = market.n
    liab = market.liabilities
    color = [0] * n

    def dfs(u):
        color[u] = 1
        for v in range(n):
            if liab[u][v] > 0:
                if color[v] == 1 or (color[v] == 0 and dfs(v)):
                    return True
        color[u] = 2
        return False

    return any(color[i] == 0 and dfs(i) for i in range(n))


class TestGreedy:
    def test_ring3_fully_cancelled(self, ring3):
        c, residual = greedy_compress(ring3)
        assert is_compression(ring3, c)
        assert all(v == 0 for row in residual.liabilities for v in row)
        p = clear_proportional(residual)
        assert defaulting_set(residual, p) == frozenset()

    def test_twocycle_leaves_straggler(self, twocycle):
        c, residual = greedy_compress(twocycle)
        assert residual.liabilities[0][1] == 0
        assert residual.liabilities[0][3] == 1
        p = clear_proportional(residual)
        assert defaulting_set(residual, p) == {0}

    def test_acyclic_input_untouched(self, twochains):
        c, residual = greedy_compress(twochains)
        assert c.total() == 0
        assert residual.liabilities == twochains.liabilities

    def test_negative_endowment_rejected(self):
        m = FinancialMarket.create(["a", "b"], [[0, 1], [1, 0]], [-1, 0])
        with pytest.raises(NegativeEndowmentError):
            greedy_compress(m)

    def test_residual_acyclic_and_someone_survives(self):
        for k in range(80):
            m = random_market(rng_for(40, k), n_max=8, liab_max=8, arc_factor=2.0)
            c, residual = greedy_compress(m)
            assert is_compression(m, c), k
            assert not _has_cycle(residual), k
            p = clear_proportional(residual)
            assert len(defaulting_set(residual, p)) <= m.n - 1, k


class TestReduceToAcyclic:
    def test_ring3_excluding_bank_keeps_cycle(self, ring3):
        reduced, c = reduce_to_acyclic(ring3, 0)
        assert c.total() == 0
        assert reduced.liabilities == ring3.liabilities

    def test_twocycle_excluding_outsider(self, twocycle):
        reduced, c = reduce_to_acyclic(twocycle, 3)
        assert reduced.liabilities[0][1] == 0
        assert reduced.liabilities[0][3] == 1

    def test_two_disjoint_cycles_scoped(self):
        m = FinancialMarket.create(
            ["a", "b", "c", "d"],
            [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
            [0, 0, 0, 0],
        )
        reduced, c = reduce_to_acyclic(m, 0)
        # the a-b cycle contains bank 0 and must survive; c-d is cancelled
        assert reduced.liabilities[0][1] == 1 and reduced.liabilities[1][0] == 1
        assert reduced.liabilities[2][3] == 0 and reduced.liabilities[3][2] == 0


class TestFlowLp:
    def test_single_path(self):
        m = FinancialMarket.create(["b", "x"], [[0, 5], [5, 0]], [0, 0])
        net = FlowNetwork.build(m, 0)
        f = flow_lp(net, F(5))
        assert f is not None and f[("fs", 1)] == 5 and f[("ft", 1)] == 5

    def test_lower_bound_above_capacity(self):
        m = FinancialMarket.create(["b", "x"], [[0, 5], [5, 0]], [0, 0])
        net = FlowNetwork.build(m, 0)
        assert flow_lp(net, F(5), {("source", 1): F(6)}) is None

    def test_diamond_max_flow_equals_min_cut(self):
        m = FinancialMarket.create(
            ["b", "x", "y"],
            [[0, 3, 2], [1, 0, 0], [3, 0, 0]],
            [0, 0, 0],
        )
        net = FlowNetwork.build(m, 0)
        f = flow_lp(net, "max")
        value = f[("fs", 1)] + f[("fs", 2)]
        # enumerate the four source/sink cuts per branch: min is {x->b-, b+->y}
        cuts = [F(3 + 2), F(1 + 3), F(3 + 3), F(1 + 2)]
        assert value == min(cuts) == 3


class TestSaveAllButOne:
    def test_ring3_zero_defaults(self, ring3):
        w = save_all_but_one(ring3, PROPORTIONAL)
        assert w is not None and w.defaulter is None
        assert w.compression.total() == 0

    def test_twocycle_witness(self, twocycle):
        w = save_all_but_one(twocycle, PROPORTIONAL)
        assert w is not None
        assert w.defaulter == 0
        assert w.report.defaulting == {0}
        compressed = apply_compression(twocycle, w.compression)
        result = check_clearing(compressed, w.clearing, PRIORITY)
        assert isinstance(result, DefaultReport)

    def test_twochains_none(self, twochains):
        assert save_all_but_one(twochains, PROPORTIONAL) is None

    def test_priority_model_on_fixture(self, prio):
        w = save_all_but_one(prio, PRIORITY)
        assert w is not None and w.report.count() <= 1

    @pytest.mark.parametrize("model,max_groups", [(PROPORTIONAL, 1), (PRIORITY, 3)])
    def test_agrees_with_milp(self, model, max_groups):
        for k in range(40):
            m = random_market(
                rng_for(41, k, max_groups), n_max=6, liab_max=6,
                max_groups=max_groups, mixed_costs=True,
            )
            witness = save_all_but_one(m, model)
            optimum = optimal_compress(m, node_budget=50_000, time_budget=60).objective
            if witness is None:
                assert optimum > 1, (k, optimum)
            else:
                assert optimum <= 1, (k, optimum)
                assert witness.report.count() <= 1
                assert is_compression(m, witness.compression)
                compressed = apply_compression(m, witness.compression)
                result = check_clearing(compressed, witness.clearing, PRIORITY)
                assert isinstance(result, DefaultReport)
                assert result.defaulting == witness.report.defaulting

    def test_beta_boundary_consistency(self):
        # verdicts agree for beta_b exactly 1 versus just below it
        for k in range(25):
            m1 = random_market(rng_for(42, k), n_max=6, liab_max=5)
            w1 = save_all_but_one(m1, PROPORTIONAL)
            near_one = F(10**6 - 1, 10**6)
            m2 = FinancialMarket(
                m1.names, m1.liabilities, m1.endowments,
                m1.alpha, (near_one,) * m1.n, m1.priorities,
            )
            w2 = save_all_but_one(m2, PROPORTIONAL)
            o1 = optimal_compress(m1, time_budget=60).objective
            o2 = optimal_compress(m2, time_budget=60).objective
            assert (w1 is not None) == (o1 <= 1), k
            assert (w2 is not None) == (o2 <= 1), k

    def test_reduction_preserves_answer(self):
        # cross-check via MILP: reducing cycles off a candidate b never
        # changes whether one default is enough
        for k in range(15):
            m = random_market(rng_for(43, k), n_max=5, liab_max=4, arc_factor=2.0)
            before = optimal_compress(m, time_budget=60).objective
            reduced, _ = reduce_to_acyclic(m, 0)
            after = optimal_compress(reduced, time_budget=60).objective
            assert (before <= 1) == (after <= 1), k
