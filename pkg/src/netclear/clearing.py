"""Maximal clearing vectors via linear programming.

The priority-proportional algorithm keeps, per bank, a default stage (effective
cost pair stays (1,1) until the bank is first seen to default, then switches to
(alpha_i, beta_i) once and for all) and a critical priority group index gamma.
Each round solves three LPs -- minimize total subsidy, then minimize total
payment at that subsidy level, then maximize total payment with the subsidy
vector pinned -- and updates the stages until nothing changes.  The result is
the coordinate-wise maximal clearing vector.

For nonnegative endowments and single-group priorities the subsidy machinery
is unnecessary and a single payment-maximizing LP per round suffices.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import NegativeEndowmentError
from .lp import EQ, LE, MAX, MIN, LpBuilder, LpProblem, solve_lp
from .market import (
    PRIORITY,
    PROPORTIONAL,
    ClearingVector,
    FinancialMarket,
)

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class RegimeState:
    """One bank's assumed stage within a round."""

    defaulted: tuple[bool, ...]  # True once the default costs apply
    gamma: tuple[int, ...]  # critical group index, k_i down to 0

    @staticmethod
    def initial(market: FinancialMarket) -> "RegimeState":
        return RegimeState(
            (False,) * market.n,
            tuple(market.group_count(i) for i in range(market.n)),
        )

    def effective_costs(self, market: FinancialMarket, i: int) -> tuple[Fraction, Fraction]:
        """Income coefficients for the round's LPs.

        A bank whose status is still open must be charged the larger of its
        two possible endowment treatments, else its relaxed income is no
        upper bound on the truth: with e_i < 0 the default treatment
        alpha_i e_i exceeds e_i, and an under-relaxed income lets payments
        grow after a cost flip, invalidating earlier rounds' conclusions.
        """
        if self.defaulted[i]:
            return market.alpha[i], market.beta[i]
        if market.endowments[i] < 0:
            return market.alpha[i], ONE
        return ONE, ONE


@dataclass(frozen=True)
class RoundRecord:
    round: int
    defaulted: tuple[bool, ...]
    gamma: tuple[int, ...]
    total_subsidy: Fraction
    subsidies: tuple[Fraction, ...]
    payments_total: Fraction


def _lam(i: int, group: int) -> tuple:
    return ("lam", i, group)


def _z(i: int) -> tuple:
    return ("z", i)


def _declare_variables(builder: LpBuilder, market: FinancialMarket, regime: RegimeState):
    """Rate variables per (bank, group) with bounds encoding the regime, plus
    one subsidy variable per bank."""
    for i in range(market.n):
        g_i = regime.gamma[i]
        for g in range(1, market.group_count(i) + 1):
            if g < g_i:
                builder.var(_lam(i, g), 1, 1)
            elif g == g_i:
                builder.var(_lam(i, g), 0, 1)
            else:
                builder.var(_lam(i, g), 0, 0)
    for i in range(market.n):
        builder.var(_z(i), 0, None)


def _budget_terms(market: FinancialMarket, regime: RegimeState, i: int) -> dict:
    """Coefficients of (outgoing payments) - beta~_i (incoming payments)."""
    coeffs: dict = {}
    for g in range(1, market.group_count(i) + 1):
        lg = market.group_liability(i, g)
        if lg:
            coeffs[_lam(i, g)] = coeffs.get(_lam(i, g), ZERO) + lg
    _, beta_eff = regime.effective_costs(market, i)
    if beta_eff:
        for j in range(market.n):
            lji = market.liabilities[j][i]
            if lji > 0:
                key = _lam(j, market.group_of(j, i))
                coeffs[key] = coeffs.get(key, ZERO) - beta_eff * lji
    return coeffs


def _base_constraints(builder: LpBuilder, market: FinancialMarket, regime: RegimeState):
    for i in range(market.n):
        alpha_eff, _ = regime.effective_costs(market, i)
        coeffs = _budget_terms(market, regime, i)
        coeffs[_z(i)] = coeffs.get(_z(i), ZERO) - ONE
        builder.add(coeffs, LE, alpha_eff * market.endowments[i])


def _payment_objective(market: FinancialMarket) -> dict:
    coeffs: dict = {}
    for i in range(market.n):
        for g in range(1, market.group_count(i) + 1):
            lg = market.group_liability(i, g)
            if lg:
                coeffs[_lam(i, g)] = lg
    return coeffs


def build_min_subsidy(market: FinancialMarket, regime: RegimeState) -> LpProblem:
    """Minimize total subsidy subject to budget and proportionality."""
    b = LpBuilder(MIN)
    _declare_variables(b, market, regime)
    _base_constraints(b, market, regime)
    b.objective({_z(i): ONE for i in range(market.n)})
    return b.build()


def build_min_payment(
    market: FinancialMarket, regime: RegimeState, zstar_total: Fraction
) -> LpProblem:
    """Minimize total payment with the total subsidy pinned to the optimum of
    the min-subsidy program; its solution carries the unique subsidy vector."""
    b = LpBuilder(MIN)
    _declare_variables(b, market, regime)
    _base_constraints(b, market, regime)
    b.add({_z(i): ONE for i in range(market.n)}, EQ, zstar_total)
    b.objective(_payment_objective(market))
    return b.build()


def build_max_payment(
    market: FinancialMarket, regime: RegimeState, zstar: tuple[Fraction, ...]
) -> LpProblem:
    """Maximize total payment with every subsidy pinned; positive-subsidy
    banks additionally pay nothing to their critical group and sit exactly on
    their budget."""
    b = LpBuilder(MAX)
    _declare_variables(b, market, regime)
    _base_constraints(b, market, regime)
    for i in range(market.n):
        b.add({_z(i): ONE}, EQ, zstar[i])
        if zstar[i] > 0:
            g_i = regime.gamma[i]
            alpha_eff, _ = regime.effective_costs(market, i)
            if g_i >= 1 and market.group_liability(i, g_i) > 0:
                b.add({_lam(i, g_i): market.group_liability(i, g_i)}, EQ, ZERO)
            coeffs = _budget_terms(market, regime, i)
            builder_rhs = alpha_eff * market.endowments[i] + zstar[i]
            b.add(coeffs, EQ, builder_rhs)
    b.objective(_payment_objective(market))
    return b.build()


def _payments_from_rates(market: FinancialMarket, assignment: dict) -> ClearingVector:
    n = market.n
    rows = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for g, grp in enumerate(market.priorities[i], start=1):
            lam = assignment[_lam(i, g)]
            for j in grp:
                rows[i][j] = lam * market.liabilities[i][j]
    return ClearingVector.create(rows)


def clear_priority_proportional(
    market: FinancialMarket,
) -> tuple[ClearingVector, list[RoundRecord]]:
    """Coordinate-wise maximal priority-proportional clearing vector plus the
    per-round regime trace.  Negative endowments are allowed."""
    n = market.n
    regime = RegimeState.initial(market)
    trace: list[RoundRecord] = []
    for round_idx in range(n * sum(market.group_count(i) for i in range(n)) + n + 2):
        sub = solve_lp(build_min_subsidy(market, regime))
        assert sub.is_optimal, f"min-subsidy LP {sub.status}"
        ztotal = sub.objective
        pay = solve_lp(build_min_payment(market, regime, ztotal))
        assert pay.is_optimal, f"min-payment LP {pay.status}"
        zvec = tuple(pay.assignment[_z(i)] for i in range(n))
        maxi = solve_lp(build_max_payment(market, regime, zvec))
        assert maxi.is_optimal, f"max-payment LP {maxi.status}"
        payments = _payments_from_rates(market, maxi.assignment)

        trace.append(
            RoundRecord(
                round_idx,
                regime.defaulted,
                regime.gamma,
                ztotal,
                zvec,
                payments.total(),
            )
        )

        defaulted = list(regime.defaulted)
        gamma = list(regime.gamma)
        changed = False
        for i in range(n):
            if regime.defaulted[i]:
                income = (
                    market.alpha[i] * market.endowments[i]
                    + market.beta[i] * payments.incoming(i)
                )
            else:
                # solvency itself is always judged at face value
                income = market.endowments[i] + payments.incoming(i)
            if not regime.defaulted[i] and income < market.total_liability(i):
                defaulted[i] = True
                changed = True
            if zvec[i] > 0 and gamma[i] > 0:
                gamma[i] -= 1
                changed = True
        if not changed:
            return payments, trace
        regime = RegimeState(tuple(defaulted), tuple(gamma))
    raise AssertionError("regime loop failed to settle within its round bound")


def build_max_payment_prop(market: FinancialMarket, defaulted: tuple[bool, ...]) -> LpProblem:
    """Payment maximization without subsidy variables.  With nonnegative
    endowments the subsidy optimum is zero, so this single LP matches the
    three-LP round of the general algorithm exactly (the maximum is unique)."""
    regime = RegimeState(defaulted, tuple(market.group_count(i) for i in range(market.n)))
    b = LpBuilder(MAX)
    for i in range(market.n):
        for g in range(1, market.group_count(i) + 1):
            b.var(_lam(i, g), 0, 1)
    for i in range(market.n):
        alpha_eff, _ = regime.effective_costs(market, i)
        b.add(_budget_terms(market, regime, i), LE, alpha_eff * market.endowments[i])
    b.objective(_payment_objective(market))
    return b.build()


def clear_proportional(market: FinancialMarket) -> ClearingVector:
    """Maximal proportional clearing for nonnegative endowments.

    Requires single-group priorities; agrees exactly with
    clear_priority_proportional on such markets.
    """
    if any(e < 0 for e in market.endowments):
        raise NegativeEndowmentError(
            "proportional clearing requires nonnegative endowments; "
            "use clear_priority_proportional"
        )
    if any(market.group_count(i) > 1 for i in range(market.n)):
        raise ValueError("proportional clearing requires single-group priorities")
    n = market.n
    defaulted = (False,) * n
    for _ in range(n + 2):
        outcome = solve_lp(build_max_payment_prop(market, defaulted))
        assert outcome.is_optimal, f"payment LP {outcome.status}"
        payments = _payments_from_rates(market, outcome.assignment)
        regime = RegimeState(defaulted, tuple(market.group_count(i) for i in range(n)))
        changed = False
        new_def = list(defaulted)
        for i in range(n):
            alpha_eff, beta_eff = regime.effective_costs(market, i)
            income = alpha_eff * market.endowments[i] + beta_eff * payments.incoming(i)
            if not defaulted[i] and income < market.total_liability(i):
                new_def[i] = True
                changed = True
        if not changed:
            return payments
        defaulted = tuple(new_def)
    raise AssertionError("default loop failed to settle within n+1 rounds")


def fixed_point_oracle(
    market: FinancialMarket,
    model: str = PRIORITY,
    max_iters: int = 10_000,
    tolerance: float = 1e-9,
) -> ClearingVector:
    """Approximate maximal clearing by monotone in-place sweeps from p = L.

    Float shadow computation used only as a test oracle: each sweep replaces
    every bank's payments with its clearing response to the current state, in
    bank order, until the largest change drops below `tolerance`.
    """
    if model not in (PROPORTIONAL, PRIORITY):
        raise ValueError(f"unknown model {model!r}")
    n = market.n
    liab = [[float(v) for v in row] for row in market.liabilities]
    p = [row[:] for row in liab]
    e = [float(v) for v in market.endowments]
    alpha = [float(v) for v in market.alpha]
    beta = [float(v) for v in market.beta]
    totals = [sum(row) for row in liab]

    for _ in range(max_iters):
        delta = 0.0
        for i in range(n):
            if totals[i] == 0.0:
                continue
            incoming = sum(p[j][i] for j in range(n))
            if e[i] + incoming >= totals[i]:
                new_row = liab[i][:]
            else:
                usable = alpha[i] * e[i] + beta[i] * incoming
                new_row = [0.0] * n
                if model == PROPORTIONAL:
                    share = max(0.0, usable) / totals[i]
                    for j in range(n):
                        new_row[j] = liab[i][j] * share
                else:
                    cum = 0.0
                    for g, grp in enumerate(market.priorities[i], start=1):
                        lg = sum(liab[i][j] for j in grp)
                        if usable >= cum + lg:
                            for j in grp:
                                new_row[j] = liab[i][j]
                        elif usable > cum:
                            frac = (usable - cum) / lg
                            for j in grp:
                                new_row[j] = liab[i][j] * frac
                        cum += lg
            delta = max(delta, max(abs(a - b) for a, b in zip(new_row, p[i])))
            p[i] = new_row
        if delta < tolerance:
            break
    return ClearingVector.create([[Fraction(v) for v in row] for row in p])
