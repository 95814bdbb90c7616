"""Financial market model and the clearing-definition checkers.

A market is a set of banks with pairwise liabilities L, endowments e, default
cost parameters alpha/beta, and per-bank ordered priority groups over
creditors.  Everything is exact rational; the checkers in this module are the
universal oracle the algorithmic modules are tested against.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import InvalidCompressionError

ZERO = Fraction(0)
ONE = Fraction(1)

PROPORTIONAL = "proportional"
PRIORITY = "priority"


def _freeze_matrix(rows: Iterable[Iterable]) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def _freeze_vector(vals: Iterable) -> tuple[Fraction, ...]:
    return tuple(Fraction(v) for v in vals)


def single_group_priorities(liabilities) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """Default priorities: one group per bank holding all its creditors."""
    prios = []
    for i, row in enumerate(liabilities):
        creditors = tuple(j for j, v in enumerate(row) if j != i and v > 0)
        prios.append((creditors,) if creditors else ())
    return tuple(prios)


@dataclass(frozen=True)
class FinancialMarket:
    """Immutable market (banks, liabilities, endowments, default costs, priorities)."""

    names: tuple[str, ...]
    liabilities: tuple[tuple[Fraction, ...], ...]
    endowments: tuple[Fraction, ...]
    alpha: tuple[Fraction, ...]
    beta: tuple[Fraction, ...]
    # priorities[i] is an ordered tuple of disjoint creditor groups; together
    # they must partition {j != i : L_ij > 0}.
    priorities: tuple[tuple[tuple[int, ...], ...], ...]

    @staticmethod
    def create(
        names: Sequence[str],
        liabilities,
        endowments,
        alpha=None,
        beta=None,
        priorities=None,
    ) -> "FinancialMarket":
        names = tuple(str(x) for x in names)
        n = len(names)
        L = _freeze_matrix(liabilities)
        e = _freeze_vector(endowments)
        a = _freeze_vector(alpha) if alpha is not None else (ONE,) * n
        b = _freeze_vector(beta) if beta is not None else (ONE,) * n
        if priorities is None:
            prios = single_group_priorities(L)
        else:
            prios = tuple(tuple(tuple(int(j) for j in grp) for grp in pg) for pg in priorities)
        return FinancialMarket(names, L, e, a, b, prios)

    @property
    def n(self) -> int:
        return len(self.names)

    def total_liability(self, i: int) -> Fraction:
        """L_i, the total owed by bank i."""
        return sum(self.liabilities[i], ZERO)

    def group_liability(self, i: int, group: int) -> Fraction:
        """Liabilities owed by bank i to its group with 1-based index `group`."""
        row = self.liabilities[i]
        return sum((row[j] for j in self.priorities[i][group - 1]), ZERO)

    def group_count(self, i: int) -> int:
        return len(self.priorities[i])

    def group_of(self, i: int, j: int) -> int:
        """1-based priority group index of creditor j for debtor i."""
        for idx, grp in enumerate(self.priorities[i], start=1):
            if j in grp:
                return idx
        raise KeyError(f"bank {j} is not a creditor of bank {i}")

    def arcs(self) -> list[tuple[int, int]]:
        """Ordered pairs (i, j) with L_ij > 0, row-major."""
        return [
            (i, j)
            for i, row in enumerate(self.liabilities)
            for j, v in enumerate(row)
            if v > 0
        ]

    def with_liabilities(self, liabilities, priorities=None) -> "FinancialMarket":
        L = _freeze_matrix(liabilities)
        if priorities is None:
            prios = single_group_priorities(L)
        else:
            prios = priorities
        return FinancialMarket(self.names, L, self.endowments, self.alpha, self.beta, prios)


@dataclass(frozen=True)
class ClearingVector:
    """Pairwise payments with 0 <= p_ij <= L_ij and zero diagonal."""

    payments: tuple[tuple[Fraction, ...], ...]

    @staticmethod
    def create(payments) -> "ClearingVector":
        return ClearingVector(_freeze_matrix(payments))

    def incoming(self, i: int) -> Fraction:
        return sum((row[i] for row in self.payments), ZERO)

    def outgoing(self, i: int) -> Fraction:
        return sum(self.payments[i], ZERO)

    def total(self) -> Fraction:
        return sum((sum(row, ZERO) for row in self.payments), ZERO)


@dataclass(frozen=True)
class Compression:
    """Liability reductions with 0 <= C <= L and per-bank flow conservation."""

    reductions: tuple[tuple[Fraction, ...], ...]

    @staticmethod
    def create(reductions) -> "Compression":
        return Compression(_freeze_matrix(reductions))

    @staticmethod
    def zero(n: int) -> "Compression":
        return Compression(tuple((ZERO,) * n for _ in range(n)))

    def __add__(self, other: "Compression") -> "Compression":
        return Compression(
            tuple(
                tuple(a + b for a, b in zip(ra, rb))
                for ra, rb in zip(self.reductions, other.reductions)
            )
        )

    def total(self) -> Fraction:
        return sum((sum(row, ZERO) for row in self.reductions), ZERO)


@dataclass(frozen=True)
class DefaultReport:
    defaulting: frozenset[int]
    solvent: frozenset[int]

    @staticmethod
    def from_defaulting(n: int, defaulting: Iterable[int]) -> "DefaultReport":
        d = frozenset(defaulting)
        return DefaultReport(d, frozenset(range(n)) - d)

    def count(self) -> int:
        return len(self.defaulting)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate(market: FinancialMarket) -> list[str]:
    """Return every violated market invariant, row-major, empty when valid."""
    out: list[str] = []
    n = market.n
    if len(market.liabilities) != n or any(len(r) != n for r in market.liabilities):
        out.append(f"liability-matrix-shape: expected {n}x{n}")
        return out
    for vec, label in ((market.endowments, "endowments"), (market.alpha, "alpha"), (market.beta, "beta")):
        if len(vec) != n:
            out.append(f"{label}-length: expected {n}, got {len(vec)}")
    if len(market.priorities) != n:
        out.append(f"priorities-length: expected {n}, got {len(market.priorities)}")
    if out:
        return out

    for i in range(n):
        for j in range(n):
            v = market.liabilities[i][j]
            if i == j and v != 0:
                out.append(f"diag-nonzero at ({i},{j})")
            if v < 0:
                out.append(f"negative-liability at ({i},{j})")
    for i in range(n):
        if not (0 <= market.alpha[i] <= 1):
            out.append(f"alpha-out-of-range at bank {i}")
    for i in range(n):
        if not (0 <= market.beta[i] <= 1):
            out.append(f"beta-out-of-range at bank {i}")
    for i in range(n):
        creditors = {j for j in range(n) if j != i and market.liabilities[i][j] > 0}
        seen: set[int] = set()
        ok = True
        for g, grp in enumerate(market.priorities[i], start=1):
            if not grp:
                out.append(f"priority-empty-group at bank {i} group {g}")
                ok = False
            for j in grp:
                if j in seen:
                    out.append(f"priority-duplicate at bank {i}: creditor {j}")
                    ok = False
                seen.add(j)
                if j not in creditors:
                    out.append(f"priority-not-a-creditor at bank {i}: {j}")
                    ok = False
        if ok and seen != creditors:
            missing = sorted(creditors - seen)
            out.append(f"priority-partition violation at bank {i}: missing {missing}")
    return out


# ---------------------------------------------------------------------------
# Compression predicates and application
# ---------------------------------------------------------------------------


def compression_violations(market: FinancialMarket, c: Compression) -> list[str]:
    out: list[str] = []
    n = market.n
    if len(c.reductions) != n or any(len(r) != n for r in c.reductions):
        return [f"compression-shape: expected {n}x{n}"]
    for i in range(n):
        for j in range(n):
            v = c.reductions[i][j]
            if v < 0:
                out.append(f"compression-negative at ({i},{j})")
            if v > market.liabilities[i][j]:
                out.append(f"compression-exceeds-liability at ({i},{j})")
    for i in range(n):
        inflow = sum((c.reductions[j][i] for j in range(n)), ZERO)
        outflow = sum(c.reductions[i], ZERO)
        if inflow != outflow:
            out.append(f"flow-condition violated at bank {i}: in {inflow} != out {outflow}")
    return out


def is_compression(market: FinancialMarket, c: Compression) -> bool:
    return not compression_violations(market, c)


def is_bilateral(c: Compression) -> bool:
    n = len(c.reductions)
    return all(c.reductions[i][j] == c.reductions[j][i] for i in range(n) for j in range(i + 1, n))


def is_cycle_compression(market: FinancialMarket, c: Compression) -> bool:
    """True iff every bank has at most one positive outgoing reduction."""
    if len(c.reductions) != market.n:
        return False
    for row in c.reductions:
        if sum(1 for v in row if v > 0) > 1:
            return False
    return True


def apply_compression(market: FinancialMarket, c: Compression) -> FinancialMarket:
    """Return the market with L' = L - C; priorities keep their order, creditors
    whose liability dropped to zero are removed, emptied groups deleted."""
    bad = compression_violations(market, c)
    if bad:
        raise InvalidCompressionError("; ".join(bad))
    new_l = tuple(
        tuple(lv - cv for lv, cv in zip(lrow, crow))
        for lrow, crow in zip(market.liabilities, c.reductions)
    )
    new_prios = []
    for i, groups in enumerate(market.priorities):
        kept = []
        for grp in groups:
            g = tuple(j for j in grp if new_l[i][j] > 0)
            if g:
                kept.append(g)
        new_prios.append(tuple(kept))
    return FinancialMarket(
        market.names, new_l, market.endowments, market.alpha, market.beta, tuple(new_prios)
    )


def cycle_indicator(n: int, cycle: Sequence[int], value: Fraction) -> Compression:
    """Compression of `value` along the closed walk cycle[0] -> ... -> cycle[0]."""
    rows = [[ZERO] * n for _ in range(n)]
    for k, i in enumerate(cycle):
        j = cycle[(k + 1) % len(cycle)]
        rows[i][j] += value
    return Compression.create(rows)


# ---------------------------------------------------------------------------
# Incomes and the clearing checker
# ---------------------------------------------------------------------------


def income_nondef(market: FinancialMarket, p: ClearingVector, i: int) -> Fraction:
    """e_i plus all incoming payments (bank assumed not to default)."""
    return market.endowments[i] + p.incoming(i)


def income_def(market: FinancialMarket, p: ClearingVector, i: int) -> Fraction:
    """alpha_i e_i plus beta_i times incoming payments (bank in default)."""
    return market.alpha[i] * market.endowments[i] + market.beta[i] * p.incoming(i)


def defaulting_set(market: FinancialMarket, p: ClearingVector) -> frozenset[int]:
    """Banks whose non-default income falls short of their total liabilities.

    A bank with no liabilities is solvent by convention, whatever its
    endowment sign.
    """
    out = set()
    for i in range(market.n):
        li = market.total_liability(i)
        if li > 0 and income_nondef(market, p, i) < li:
            out.add(i)
    return frozenset(out)


def check_clearing(market: FinancialMarket, p: ClearingVector, model: str = PRIORITY):
    """Verify that p satisfies the clearing definition exactly.

    Returns a DefaultReport when every bank passes, otherwise the list of
    per-bank violations.  All comparisons are exact rational equality.
    """
    n = market.n
    if len(p.payments) != n or any(len(r) != n for r in p.payments):
        raise ValueError(f"payment matrix must be {n}x{n}")
    if model not in (PROPORTIONAL, PRIORITY):
        raise ValueError(f"unknown clearing model {model!r}")

    violations: list[str] = []
    for i in range(n):
        row = p.payments[i]
        lrow = market.liabilities[i]
        for j in range(n):
            if row[j] < 0 or row[j] > lrow[j]:
                violations.append(f"payment-out-of-bounds at ({i},{j})")
    if violations:
        return violations

    for i in range(n):
        li = market.total_liability(i)
        e_nd = income_nondef(market, p, i)
        if li == 0 or e_nd >= li:
            for j in range(n):
                if p.payments[i][j] != market.liabilities[i][j]:
                    violations.append(
                        f"bank {i}: solvent but payment to {j} is "
                        f"{p.payments[i][j]} != {market.liabilities[i][j]}"
                    )
            continue
        e_d = income_def(market, p, i)
        if model == PROPORTIONAL:
            for j in range(n):
                lij = market.liabilities[i][j]
                expected = max(ZERO, lij / li * e_d) if lij > 0 else ZERO
                if p.payments[i][j] != expected:
                    violations.append(
                        f"bank {i}: proportional payment to {j} is "
                        f"{p.payments[i][j]} != {expected}"
                    )
        else:
            cum = ZERO
            for g, grp in enumerate(market.priorities[i], start=1):
                lg = market.group_liability(i, g)
                lo, hi = cum, cum + lg
                for j in grp:
                    lij = market.liabilities[i][j]
                    if e_d >= hi:
                        expected = lij
                    elif e_d >= lo:
                        expected = lij / lg * (e_d - lo)
                    else:
                        expected = ZERO
                    if p.payments[i][j] != expected:
                        violations.append(
                            f"bank {i}: priority payment to {j} (group {g}) is "
                            f"{p.payments[i][j]} != {expected}"
                        )
                cum = hi

    if violations:
        return violations
    return DefaultReport.from_defaulting(n, defaulting_set(market, p))


def full_payment(market: FinancialMarket) -> ClearingVector:
    return ClearingVector(market.liabilities)
