"""Clearing algorithms: LP construction, regime loop, oracle agreement."""

from fractions import Fraction as F

import pytest

from genutil import random_market, rng_for
from netclear import fixtures, lp
from netclear.clearing import (
    RegimeState,
    build_max_payment,
    build_min_payment,
    build_min_subsidy,
    clear_priority_proportional,
    clear_proportional,
    fixed_point_oracle,
)
from netclear.errors import NegativeEndowmentError
from netclear.market import (
    PRIORITY,
    PROPORTIONAL,
    DefaultReport,
    FinancialMarket,
    check_clearing,
    defaulting_set,
)


def _z(i):
    return ("z", i)


class TestSubsidyLp:
    def test_prio_routes_endowment_to_first_group(self, prio):
        regime = RegimeState.initial(prio)  # gammas (2, 0, 0)
        out = lp.solve_lp(build_min_subsidy(prio, regime))
        assert out.is_optimal and out.objective == 0

    def test_single_bank_negative_endowment_needs_subsidy(self):
        m = FinancialMarket.create(["a"], [[0]], [-1])
        out = lp.solve_lp(build_min_subsidy(m, RegimeState.initial(m)))
        assert out.objective == 1

    def test_ring_full_circulation_balances(self, ring3):
        out = lp.solve_lp(build_min_subsidy(ring3, RegimeState.initial(ring3)))
        assert out.objective == 0

    def test_min_payment_drops_to_zero_on_ring(self, ring3):
        regime = RegimeState.initial(ring3)
        out = lp.solve_lp(build_min_payment(ring3, regime, F(0)))
        assert out.is_optimal
        lam_total = sum(
            out.assignment[k] for k in out.assignment if k[0] == "lam"
        )
        assert lam_total == 0

    def test_max_payment_restores_full_ring(self, ring3):
        regime = RegimeState.initial(ring3)
        out = lp.solve_lp(build_max_payment(ring3, regime, (F(0),) * 3))
        assert out.objective == 3  # all three unit liabilities paid

    def test_max_payment_priority_cap(self, prio):
        regime = RegimeState(defaulted=(True, False, False), gamma=(2, 0, 0))
        out = lp.solve_lp(build_max_payment(prio, regime, (F(0),) * 3))
        assert out.assignment[("lam", 0, 1)] == 1
        assert out.assignment[("lam", 0, 2)] == 0


class TestClearFixtures:
    def test_prio(self, prio):
        p, trace = clear_priority_proportional(prio)
        assert p.payments[0][1] == 1 and p.payments[0][2] == 0
        report = check_clearing(prio, p, PRIORITY)
        assert isinstance(report, DefaultReport) and report.defaulting == {0}

    def test_asym_clears_to_zero(self, asym):
        p, _ = clear_priority_proportional(asym)
        assert p.total() == 0
        report = check_clearing(asym, p, PRIORITY)
        assert isinstance(report, DefaultReport) and report.defaulting == {0, 1}

    def test_ring3_full_payment(self, ring3):
        p, _ = clear_priority_proportional(ring3)
        assert p.payments == ring3.liabilities
        report = check_clearing(ring3, p, PRIORITY)
        assert report.defaulting == frozenset()

    def test_chain(self, chain):
        p = clear_proportional(chain)
        assert p.payments[0][1] == 1

    def test_twocycle_collapses(self, twocycle):
        p = clear_proportional(twocycle)
        assert p.total() == 0
        report = check_clearing(twocycle, p, PROPORTIONAL)
        assert report.defaulting == {0, 1, 2}

    def test_negative_endowment_rejected_by_proportional(self):
        m = FinancialMarket.create(["a", "b"], [[0, 1], [0, 0]], [-1, 0])
        with pytest.raises(NegativeEndowmentError):
            clear_proportional(m)
        p, _ = clear_priority_proportional(m)  # the general path handles it
        report = check_clearing(m, p, PRIORITY)
        assert isinstance(report, DefaultReport)


class TestOracle:
    def test_ring_is_immediate_fixed_point(self, ring3):
        p = fixed_point_oracle(ring3, PRIORITY)
        assert p.payments == ring3.liabilities

    def test_asym_decays_to_zero(self, asym):
        p = fixed_point_oracle(asym, PRIORITY, tolerance=1e-9)
        assert all(abs(float(v)) < 1e-8 for row in p.payments for v in row)

    def test_chain_one_sweep(self, chain):
        p = fixed_point_oracle(chain, PROPORTIONAL, max_iters=2)
        assert float(p.payments[0][1]) == 1.0


def _trace_invariants(market, trace):
    k_total = sum(market.group_count(i) for i in range(market.n))
    assert len(trace) <= market.n * max(k_total, 1) + 1
    for i in range(market.n):
        flips = sum(
            1
            for a, b in zip(trace, trace[1:])
            if a.defaulted[i] != b.defaulted[i]
        )
        assert flips <= 1
        gammas = [rec.gamma[i] for rec in trace]
        assert all(g1 >= g2 for g1, g2 in zip(gammas, gammas[1:]))


class TestRandomMarkets:
    def test_clearing_validity_and_trace(self):
        for k in range(120):
            m = random_market(
                rng_for(7, k), n_max=7, liab_max=6, max_groups=3,
                allow_negative_endowment=True, mixed_costs=True,
            )
            p, trace = clear_priority_proportional(m)
            report = check_clearing(m, p, PRIORITY)
            assert isinstance(report, DefaultReport), (k, report)
            _trace_invariants(m, trace)

    def test_oracle_dominance(self):
        for k in range(60):
            m = random_market(
                rng_for(8, k), n_max=7, liab_max=6, max_groups=2, mixed_costs=True
            )
            p, _ = clear_priority_proportional(m)
            oracle = fixed_point_oracle(m, PRIORITY, tolerance=1e-10)
            for i in range(m.n):
                for j in range(m.n):
                    assert p.payments[i][j] >= oracle.payments[i][j] - F(1, 10**9)

    def test_specialization_matches(self):
        for k in range(60):
            m = random_market(rng_for(9, k), n_max=7, liab_max=6, mixed_costs=True)
            p1 = clear_proportional(m)
            p2, _ = clear_priority_proportional(m)
            assert p1.payments == p2.payments, k

    def test_spade_property_on_outputs(self):
        # banks needing subsidy pay nothing to their critical group
        for k in range(60):
            m = random_market(
                rng_for(10, k), n_max=6, liab_max=5, max_groups=3,
                allow_negative_endowment=True, mixed_costs=True,
            )
            regime = RegimeState.initial(m)
            sub = lp.solve_lp(build_min_subsidy(m, regime))
            pay = lp.solve_lp(build_min_payment(m, regime, sub.objective))
            zvec = tuple(pay.assignment[_z(i)] for i in range(m.n))
            maxi = lp.solve_lp(build_max_payment(m, regime, zvec))
            for i in range(m.n):
                if zvec[i] > 0:
                    gi = regime.gamma[i]
                    if gi >= 1:
                        assert maxi.assignment[("lam", i, gi)] == 0
                    # net equity is exactly zero
                    alpha_eff, beta_eff = regime.effective_costs(m, i)
                    incoming = sum(
                        maxi.assignment[("lam", j, m.group_of(j, i))] * m.liabilities[j][i]
                        for j in range(m.n)
                        if m.liabilities[j][i] > 0
                    )
                    outgoing = sum(
                        maxi.assignment[("lam", i, g)] * m.group_liability(i, g)
                        for g in range(1, m.group_count(i) + 1)
                    )
                    net = alpha_eff * m.endowments[i] + zvec[i] + beta_eff * incoming - outgoing
                    assert net == 0, (k, i)

    def test_subsidy_vector_unique_under_perturbed_objective(self):
        # re-solve min-payment with a perturbed objective; z must not move
        for k in range(40):
            m = random_market(
                rng_for(11, k), n_max=6, liab_max=5, max_groups=2,
                allow_negative_endowment=True, mixed_costs=True,
            )
            regime = RegimeState.initial(m)
            sub = lp.solve_lp(build_min_subsidy(m, regime))
            base = build_min_payment(m, regime, sub.objective)
            out1 = lp.solve_lp(base)
            z1 = [out1.assignment[_z(i)] for i in range(m.n)]

            perturbed = lp.LpBuilder("min")
            for v in base.variables:
                perturbed.var(v.id, v.lower, v.upper)
            for c in base.constraints:
                perturbed.add(dict(c.coeffs), c.relation, c.rhs)
            eps = F(1, 10**6)
            coeffs = dict(base.objective.coeffs)
            for t, (key, val) in enumerate(sorted(coeffs.items())):
                coeffs[key] = val * (1 + eps * (t + 1))
            perturbed.objective(coeffs)
            out2 = lp.solve_lp(perturbed.build())
            z2 = [out2.assignment[_z(i)] for i in range(m.n)]
            assert z1 == z2, k


def test_round_bound_regression(prio):
    # alpha=beta=1 banks must not flip the default stage more than once
    p, trace = clear_priority_proportional(prio)
    assert len(trace) <= 3
