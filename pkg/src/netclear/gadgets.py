"""Hard-instance generators: compression questions encode Max-2-SAT and
Partition through these markets, which makes them sharp adversarial fixtures
for the optimizers at tiny sizes.

The satisfiability family uses astronomically large liabilities (2^100) by
design; those instances are generated and checked structurally, not solved.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .errors import FormulaOutOfScopeError, OddSumError
from .market import Compression, FinancialMarket

ZERO = Fraction(0)

KIND_MAX2SAT = "max2sat"
KIND_MAX2SAT_CYCLE = "max2sat-cycle"
KIND_PARTITION = "partition"

HUGE = Fraction(2**100)


@dataclass(frozen=True)
class TwoSatFormula:
    """2-CNF where every variable occurs once or twice positively and once or
    twice negatively (the restricted family the reduction needs)."""

    n: int
    clauses: tuple[tuple[int, int], ...]  # literals: +v / -v, 1-based

    @staticmethod
    def create(n: int, clauses: Iterable[Iterable[int]]) -> "TwoSatFormula":
        cl = tuple(tuple(int(l) for l in c) for c in clauses)
        formula = TwoSatFormula(n, cl)
        problems = formula.violations()
        if problems:
            raise FormulaOutOfScopeError("; ".join(problems))
        return formula

    @property
    def m(self) -> int:
        return len(self.clauses)

    def positive_count(self, v: int) -> int:
        return sum(1 for c in self.clauses for l in c if l == v)

    def negative_count(self, v: int) -> int:
        return sum(1 for c in self.clauses for l in c if l == -v)

    def violations(self) -> list[str]:
        out = []
        if self.n < 1:
            out.append("need at least one variable")
        if not self.clauses:
            out.append("need at least one clause")
        for c in self.clauses:
            if len(c) != 2:
                out.append(f"clause {c} must have exactly two literals")
                continue
            for l in c:
                if l == 0 or abs(l) > self.n:
                    out.append(f"literal {l} out of range")
        if out:
            return out
        for v in range(1, self.n + 1):
            pos, neg = self.positive_count(v), self.negative_count(v)
            if not 1 <= pos <= 2:
                out.append(f"variable {v} occurs {pos} times positively (need 1 or 2)")
            if not 1 <= neg <= 2:
                out.append(f"variable {v} occurs {neg} times negatively (need 1 or 2)")
        return out


@dataclass(frozen=True)
class GadgetMarket:
    market: FinancialMarket
    kind: str
    threshold: Optional[int]  # solvent banks achievable iff yes-instance
    distinguished: Optional[str]  # bank to be saved (partition kind)
    parameter: Fraction  # Q or R

    def index_of(self, name: str) -> int:
        return self.market.names.index(name)


def max2sat_market(formula: TwoSatFormula, k: int, variant: str = "general") -> GadgetMarket:
    """Market whose optimal compression saves nQ + K + m + n banks iff K
    clauses are satisfiable.  The cycle variant rewires the chain heads to the
    next variable bank so the only cycles form one big ring."""
    if variant not in ("general", "cycle"):
        raise FormulaOutOfScopeError(f"unknown variant {variant!r}")
    problems = formula.violations()
    if problems:
        raise FormulaOutOfScopeError("; ".join(problems))
    if k > formula.m:
        raise FormulaOutOfScopeError(f"k={k} exceeds clause count {formula.m}")

    n, m = formula.n, formula.m
    q = 2 * m + 6 * n + 1

    names: list[str] = []
    for i in range(1, n + 1):
        names.append(f"v{i}")
        names.append(f"v{i}'")
        names.extend(f"T{i}^{l}" for l in range(q + 1))
        names.extend(f"F{i}^{l}" for l in range(q + 1))
    for j in range(1, m + 1):
        names.append(f"c{j}")
        names.append(f"c{j}'")
    idx = {name: pos for pos, name in enumerate(names)}

    total = len(names)
    liab = [[ZERO] * total for _ in range(total)]
    endow = [ZERO] * total

    def put(a: str, b: str, value):
        liab[idx[a]][idx[b]] = Fraction(value)

    for i in range(1, n + 1):
        endow[idx[f"v{i}"]] = Fraction(3)
        put(f"v{i}", f"v{i}'", 7)
        put(f"v{i}", f"T{i}^0", 16)
        put(f"v{i}", f"F{i}^0", 16)
        back = f"v{i}" if variant == "general" else f"v{i % n + 1}"
        put(f"T{i}^0", back, 16)
        put(f"F{i}^0", back, 16)
        put(f"T{i}^0", f"T{i}^1", HUGE)
        put(f"F{i}^0", f"F{i}^1", HUGE)
        for l in range(1, q):
            put(f"T{i}^{l}", f"T{i}^{l + 1}", 2)
            put(f"F{i}^{l}", f"F{i}^{l + 1}", 2)
    for j, clause in enumerate(formula.clauses, start=1):
        for lit in clause:
            v = abs(lit)
            if lit > 0:
                amount = 2 if formula.positive_count(v) == 1 else 1
                put(f"T{v}^{q}", f"c{j}", amount)
            else:
                amount = 2 if formula.negative_count(v) == 1 else 1
                put(f"F{v}^{q}", f"c{j}", amount)
        put(f"c{j}", f"c{j}'", 1)

    market = FinancialMarket.create(names, liab, endow)
    kind = KIND_MAX2SAT if variant == "general" else KIND_MAX2SAT_CYCLE
    return GadgetMarket(
        market=market,
        kind=kind,
        threshold=n * q + k + m + n,
        distinguished=None,
        parameter=Fraction(q),
    )


def partition_market(values: Iterable[int]) -> GadgetMarket:
    """Market in which the distinguished bank b' can be kept solvent by some
    compression iff the values admit an equal split."""
    vals = [int(v) for v in values]
    if not vals or any(v <= 0 for v in vals):
        raise OddSumError("values must be positive integers")
    total = sum(vals)
    if total % 2:
        raise OddSumError(f"value sum {total} is odd; no equal split exists")

    n = len(vals)
    r = Fraction(4 * n * sum(v * v for v in vals) + 1)
    big = 4 * r * r * n + 1
    half = Fraction(total, 2)

    names: list[str] = []
    for i in range(1, n + 1):
        names.extend((f"xhat{i}", f"x{i}", f"y{i}", f"xstar{i}"))
    names.extend(("bS", "b-S", "b'", "b*"))
    idx = {name: pos for pos, name in enumerate(names)}

    size = len(names)
    liab = [[ZERO] * size for _ in range(size)]
    endow = [ZERO] * size

    def put(a: str, b: str, value):
        liab[idx[a]][idx[b]] = Fraction(value)

    for i, a in enumerate(vals, start=1):
        endow[idx[f"x{i}"]] = Fraction(a)
        endow[idx[f"y{i}"]] = Fraction(a)
        put(f"x{i}", f"xstar{i}", r)
        put(f"y{i}", f"xstar{i}", r)
        put(f"xstar{i}", f"xhat{i}", r)
        put(f"xhat{i}", f"y{i}", r)
        put(f"xhat{i}", f"x{i}", r)
        put(f"xstar{i}", "b*", big)
        put(f"x{i}", "bS", Fraction(a) + Fraction(1, 2 * n))
        put(f"y{i}", "b-S", Fraction(a) + Fraction(1, 2 * n))
    put("bS", "b'", half)
    put("b-S", "b'", half)
    put("b'", "b*", Fraction(total))

    market = FinancialMarket.create(names, liab, endow)
    return GadgetMarket(
        market=market,
        kind=KIND_PARTITION,
        threshold=len(names) - 3,
        distinguished="b'",
        parameter=r,
    )


def partition_yes_compression(gadget: GadgetMarket, split: Iterable[int]) -> Compression:
    """The explicit witness for a yes-instance: cancel one triangle per value,
    through x_i when i is in the split and through y_i otherwise."""
    assert gadget.kind == KIND_PARTITION
    market = gadget.market
    n = (market.n - 4) // 4
    split = set(split)
    r = gadget.parameter
    rows = [[ZERO] * market.n for _ in range(market.n)]
    idx = {name: pos for pos, name in enumerate(market.names)}
    for i in range(1, n + 1):
        mid = f"x{i}" if i in split else f"y{i}"
        rows[idx[f"xstar{i}"]][idx[f"xhat{i}"]] = r
        rows[idx[f"xhat{i}"]][idx[mid]] = r
        rows[idx[mid]][idx[f"xstar{i}"]] = r
    return Compression.create(rows)
