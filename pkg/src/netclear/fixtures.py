"""Small reference markets used throughout the docs and tests."""

from __future__ import annotations

from fractions import Fraction

from .market import FinancialMarket

F = Fraction


def chain() -> FinancialMarket:
    """Two banks, 1 owes 2 two units, endowments (1, 0)."""
    return FinancialMarket.create(
        ["b1", "b2"],
        [[0, 2], [0, 0]],
        [1, 0],
    )


def ring3() -> FinancialMarket:
    """Three banks in a liability cycle of one unit each, zero endowments."""
    return FinancialMarket.create(
        ["b1", "b2", "b3"],
        [[0, 1, 0], [0, 0, 1], [1, 0, 0]],
        [0, 0, 0],
    )


def asym() -> FinancialMarket:
    """Two banks owing each other 1 and 1/2, zero endowments, beta = 1/2."""
    return FinancialMarket.create(
        ["b1", "b2"],
        [[0, 1], [F(1, 2), 0]],
        [0, 0],
        alpha=[1, 1],
        beta=[F(1, 2), F(1, 2)],
    )


def prio() -> FinancialMarket:
    """Three banks; bank 1 owes 1 to each of banks 2 and 3 in separate
    priority groups, endowment 1."""
    return FinancialMarket.create(
        ["b1", "b2", "b3"],
        [[0, 1, 1], [0, 0, 0], [0, 0, 0]],
        [1, 0, 0],
        priorities=[((1,), (2,)), (), ()],
    )


def twocycle() -> FinancialMarket:
    """Ring 1->2->3->1 of liability 2 plus an arc 1->4 of 1, zero endowments."""
    return FinancialMarket.create(
        ["b1", "b2", "b3", "b4"],
        [[0, 2, 0, 1], [0, 0, 2, 0], [2, 0, 0, 0], [0, 0, 0, 0]],
        [0, 0, 0, 0],
    )


def twochains() -> FinancialMarket:
    """Two disjoint unit chains 1->2 and 3->4, zero endowments."""
    return FinancialMarket.create(
        ["b1", "b2", "b3", "b4"],
        [[0, 1, 0, 0], [0, 0, 0, 0], [0, 0, 0, 1], [0, 0, 0, 0]],
        [0, 0, 0, 0],
    )


FIXTURES = {
    "chain": chain,
    "ring3": ring3,
    "asym": asym,
    "prio": prio,
    "twocycle": twocycle,
    "twochains": twochains,
}


def fixture(name: str) -> FinancialMarket:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; have {sorted(FIXTURES)}") from None
