"""Default-minimizing compression as a mixed-integer linear program.

Money is scaled to make every liability integral, compression per arc is a
binary expansion C_a = sum 2^l z_{a,l}, and the bilinear products between the
pro-rata rates and the compression bits are linearized exactly (McCormick on
a binary factor).  Priority structure comes from one indicator per priority
class; budget rows force defaulting banks to pay out exactly their usable
income.  Minimizing the number of default indicators then yields an optimal
compression together with a consistent priority-proportional clearing.

Also the ground-truth oracle for the other compression modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .clearing import clear_priority_proportional
from .errors import (
    InvalidInputError,
    NegativeEndowmentError,
    NonIntegralAfterScalingError,
)
from .lp import EQ, GE, LE, MIN, LpBuilder, MilpProblem, solve_milp
from .market import (
    PRIORITY,
    ClearingVector,
    Compression,
    DefaultReport,
    FinancialMarket,
    apply_compression,
    check_clearing,
)

ZERO = Fraction(0)
ONE = Fraction(1)

RESTRICT_NONE = "none"
RESTRICT_BILATERAL = "bilateral"

SCALE_CAP = 10**6


def _q(i):
    return ("q", i)


def _zbit(a, bit):
    return ("z", a, bit)


def _lam(i, r):
    return ("lam", i, r)


def _mu(i, r):
    return ("mu", i, r)


def _pay(a):
    return ("p", a)


def _ybit(a, bit):
    return ("y", a, bit)


def _x(i):
    return ("x", i)


@dataclass(frozen=True)
class MilpEncoding:
    """Bookkeeping needed to read a solution back into market terms."""

    scale: int
    arcs: tuple[tuple[int, int], ...]
    bit_widths: dict
    scaled_liability: dict
    assets_bound: tuple[Fraction, ...]
    restrict: str
    branch_ranks: dict

    @staticmethod
    def make_branch_ranks(n, arcs, widths, group_counts) -> dict:
        """Branch default indicators first (they move the bound), then the
        priority-class selectors, then compression bits from the most
        significant down."""
        ranks: dict = {}
        for i in range(n):
            ranks[_q(i)] = (0,)
        for i in range(n):
            for r in range(1, group_counts[i] + 1):
                ranks[_mu(i, r)] = (1,)
        for a in arcs:
            w = widths[a]
            for bit in range(w):
                ranks[_zbit(a, bit)] = (2, w - 1 - bit)
        return ranks


def choose_scale(market: FinancialMarket, cap: int = SCALE_CAP) -> int:
    """Least common multiple of the liability denominators."""
    s = 1
    for row in market.liabilities:
        for v in row:
            if v > 0:
                s = s * v.denominator // math.gcd(s, v.denominator)
                if s > cap:
                    raise InvalidInputError(
                        f"auto-scale exceeds cap {cap}; liabilities are too finely grained"
                    )
    return s


def build_milp(
    market: FinancialMarket, scale=None, restrict: str = RESTRICT_NONE
) -> tuple[MilpProblem, MilpEncoding]:
    """Transcribe the optimization over (compression bits, payments, default
    indicators) for the scaled market.  `scale=None` picks the liability
    denominator LCM automatically."""
    if restrict not in (RESTRICT_NONE, RESTRICT_BILATERAL):
        raise InvalidInputError(f"unknown restriction {restrict!r}")
    if any(e < 0 for e in market.endowments):
        raise NegativeEndowmentError("the MILP formulation requires nonnegative endowments")
    s = choose_scale(market) if scale is None else int(scale)
    if s <= 0:
        raise InvalidInputError("scale must be positive")

    n = market.n
    arcs = tuple(market.arcs())
    scaled: dict = {}
    widths: dict = {}
    for a in arcs:
        v = market.liabilities[a[0]][a[1]] * s
        if v.denominator != 1:
            raise NonIntegralAfterScalingError(
                f"liability on arc {a} is {v} after scaling by {s}"
            )
        scaled[a] = int(v)
        widths[a] = int(v).bit_length()

    e_scaled = [market.endowments[i] * s for i in range(n)]
    r_bound = []
    for i in range(n):
        incoming = sum(scaled[a] for a in arcs if a[1] == i)
        r_bound.append(max(e_scaled[i], ZERO) + incoming)

    b = LpBuilder(MIN)
    for i in range(n):
        b.binary(_q(i))
    for a in arcs:
        for bit in range(widths[a]):
            b.binary(_zbit(a, bit))
    for i in range(n):
        for r in range(1, market.group_count(i) + 1):
            b.var(_lam(i, r), 0, 1)
    for i in range(n):
        for r in range(1, market.group_count(i) + 1):
            b.binary(_mu(i, r))
    for a in arcs:
        b.var(_pay(a), 0, None)
    for a in arcs:
        for bit in range(widths[a]):
            b.var(_ybit(a, bit), 0, 1)
    for i in range(n):
        b.var(_x(i), 0, None)

    def compression_coeffs(a, sign=1):
        return {_zbit(a, bit): sign * (1 << bit) for bit in range(widths[a])}

    # circulation: compression in equals compression out at every bank
    for i in range(n):
        coeffs: dict = {}
        for a in arcs:
            if a[1] == i:
                coeffs.update(compression_coeffs(a))
        for a in arcs:
            if a[0] == i:
                for k, v in compression_coeffs(a, -1).items():
                    coeffs[k] = coeffs.get(k, 0) + v
        if coeffs:
            b.add(coeffs, EQ, 0)

    # the bits may not encode more than the arc's liability
    for a in arcs:
        b.add(compression_coeffs(a), LE, scaled[a])

    if restrict == RESTRICT_BILATERAL:
        arc_set = set(arcs)
        for i in range(n):
            for j in range(i + 1, n):
                fwd, bwd = (i, j), (j, i)
                coeffs = {}
                if fwd in arc_set:
                    coeffs.update(compression_coeffs(fwd))
                if bwd in arc_set:
                    for k, v in compression_coeffs(bwd, -1).items():
                        coeffs[k] = coeffs.get(k, 0) + v
                if coeffs:
                    b.add(coeffs, EQ, 0)

    # payments are the class rate applied to the residual liability
    for i in range(n):
        for r, grp in enumerate(market.priorities[i], start=1):
            for j in grp:
                a = (i, j)
                coeffs = {_pay(a): ONE, _lam(i, r): -Fraction(scaled[a])}
                for bit in range(widths[a]):
                    coeffs[_ybit(a, bit)] = 1 << bit
                b.add(coeffs, EQ, 0)
                for bit in range(widths[a]):
                    y, z = _ybit(a, bit), _zbit(a, bit)
                    b.add({y: 1, z: -1}, LE, 0)
                    b.add({y: 1, _lam(i, r): -1}, LE, 0)
                    b.add({y: 1, _lam(i, r): -1, z: -1}, GE, -1)

    # exactly one priority class is the transition point; rates form the
    # full/partial/zero staircase around it
    for i in range(n):
        k = market.group_count(i)
        if k == 0:
            continue
        b.add({_mu(i, r): 1 for r in range(1, k + 1)}, EQ, 1)
        for r in range(1, k + 1):
            tail = {_mu(i, j): 1 for j in range(r + 1, k + 1)}
            coeffs = dict(tail)
            coeffs[_lam(i, r)] = -1
            b.add(coeffs, LE, 0)
            head = {_mu(i, j): 1 for j in range(r, k + 1)}
            head[_lam(i, r)] = -1
            b.add(head, GE, 0)

    # solvent banks pay their whole residual debt
    for i in range(n):
        out_arcs = [a for a in arcs if a[0] == i]
        if not out_arcs:
            continue
        li = sum(scaled[a] for a in out_arcs)
        coeffs = {_q(i): Fraction(li)}
        for a in out_arcs:
            coeffs[_pay(a)] = coeffs.get(_pay(a), ZERO) + 1
            for k, v in compression_coeffs(a).items():
                coeffs[k] = coeffs.get(k, 0) + v
        b.add(coeffs, GE, li)

    # budget rows: defaulting banks pay out exactly their haircut income,
    # solvent banks at least cover their payments
    for i in range(n):
        in_arcs = [a for a in arcs if a[1] == i]
        out_arcs = [a for a in arcs if a[0] == i]
        lb: dict = {_q(i): -(1 - market.alpha[i]) * e_scaled[i]}
        for a in in_arcs:
            lb[_pay(a)] = lb.get(_pay(a), ZERO) + 1
        if market.beta[i] != 1:
            lb[_x(i)] = -(1 - market.beta[i])
        for a in out_arcs:
            lb[_pay(a)] = lb.get(_pay(a), ZERO) - 1
        b.add(lb, GE, -e_scaled[i])
        ub = dict(lb)
        ub[_q(i)] = ub.get(_q(i), ZERO) + r_bound[i]
        b.add(ub, LE, r_bound[i] - e_scaled[i])

        # x_i switches between 0 and the total incoming payment
        b.add({_x(i): 1, _q(i): -r_bound[i]}, LE, 0)
        coeffs = {_x(i): ONE}
        for a in in_arcs:
            coeffs[_pay(a)] = coeffs.get(_pay(a), ZERO) - 1
        b.add(coeffs, LE, 0)
        coeffs = dict(coeffs)
        coeffs[_q(i)] = coeffs.get(_q(i), ZERO) - r_bound[i]
        b.add(coeffs, GE, -r_bound[i])

    b.objective({_q(i): ONE for i in range(n)})
    problem = b.build_milp()
    encoding = MilpEncoding(
        scale=s,
        arcs=arcs,
        bit_widths=widths,
        scaled_liability=scaled,
        assets_bound=tuple(r_bound),
        restrict=restrict,
        branch_ranks=MilpEncoding.make_branch_ranks(
            n, arcs, widths, [market.group_count(i) for i in range(n)]
        ),
    )
    return problem, encoding


@dataclass(frozen=True)
class CompressResult:
    compression: Compression
    clearing: ClearingVector
    report: DefaultReport
    objective: int
    nodes: int


def extract_compression(
    market: FinancialMarket, encoding: MilpEncoding, assignment: dict
) -> Compression:
    n = market.n
    rows = [[ZERO] * n for _ in range(n)]
    for a in encoding.arcs:
        total = sum(
            (1 << bit)
            for bit in range(encoding.bit_widths[a])
            if assignment[_zbit(a, bit)] == 1
        )
        rows[a[0]][a[1]] = Fraction(total, encoding.scale)
    return Compression.create(rows)


def extract_payments(
    market: FinancialMarket, encoding: MilpEncoding, assignment: dict
) -> ClearingVector:
    n = market.n
    rows = [[ZERO] * n for _ in range(n)]
    for a in encoding.arcs:
        rows[a[0]][a[1]] = assignment[_pay(a)] / encoding.scale
    return ClearingVector.create(rows)


def optimal_compress(
    market: FinancialMarket,
    scale=None,
    restrict: str = RESTRICT_NONE,
    node_budget: int = 200_000,
    time_budget: Optional[float] = None,
) -> CompressResult:
    """Solve the MILP and return a verified (compression, clearing) witness
    whose default count equals the MILP optimum.

    The payments embedded in the MILP solution are used directly when they
    check out as a clearing vector; among alternative optima the solver can
    land on one whose payment split is not the canonical write-down, in which
    case the compressed market is re-cleared exactly.
    """
    problem, encoding = build_milp(market, scale, restrict)
    outcome = solve_milp(
        problem,
        node_budget=node_budget,
        time_budget=time_budget,
        branch_ranks=encoding.branch_ranks,
    )
    if not outcome.is_optimal:
        raise InvalidInputError(f"compression MILP is {outcome.status}")
    objective = int(outcome.objective)
    compression = extract_compression(market, encoding, outcome.assignment)
    compressed = apply_compression(market, compression)

    payments = extract_payments(market, encoding, outcome.assignment)
    result = check_clearing(compressed, payments, PRIORITY)
    if not isinstance(result, DefaultReport):
        payments, _ = clear_priority_proportional(compressed)
        result = check_clearing(compressed, payments, PRIORITY)
        assert isinstance(result, DefaultReport), result
    if len(result.defaulting) != objective:
        raise AssertionError(
            f"extracted clearing defaults {sorted(result.defaulting)} "
            f"but MILP objective is {objective}"
        )
    return CompressResult(compression, payments, result, objective, outcome.nodes)
