"""Greedy cycle-canceling compression and the "save all but one" deciders.

The deciders guess the single defaulting bank b (and, under priority
clearing, the lowest fully paid priority group), cancel all liability cycles
avoiding b, and then search for a compression routed through b as a flow in
the split network b+ -> ... -> b-.  Candidate flows come from the structure
of the solvency conditions: when beta_b = 1 they are linear and one LP
suffices; otherwise only two flow sizes can matter (the maximum size, or a
closed form derived from forcing the solvency conditions tight), plus a
full-coverage shortcut in the priority model.  Every candidate is verified by
actually clearing the compressed market, so the verdict never depends on the
flow algebra alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .clearing import clear_priority_proportional
from .errors import NegativeEndowmentError
from .lp import EQ, GE, LE, MAX, MIN, LpBuilder, solve_lp
from .market import (
    PRIORITY,
    PROPORTIONAL,
    ClearingVector,
    Compression,
    DefaultReport,
    FinancialMarket,
    apply_compression,
    check_clearing,
    cycle_indicator,
    full_payment,
)

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Greedy cycle canceling
# ---------------------------------------------------------------------------


def _find_cycle(liab, allowed) -> Optional[list[int]]:
    """First directed cycle within `allowed` nodes, DFS in ascending
    adjacency order; None when the induced graph is acyclic."""
    n = len(liab)
    color = {i: 0 for i in allowed}  # 0 white, 1 on stack, 2 done
    parent: dict[int, int] = {}
    for start in sorted(allowed):
        if color[start] != 0:
            continue
        stack = [(start, iter(sorted(j for j in allowed if liab[start][j] > 0)))]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == 0:
                    color[nxt] = 1
                    parent[nxt] = node
                    stack.append((nxt, iter(sorted(j for j in allowed if liab[nxt][j] > 0))))
                    advanced = True
                    break
                if color[nxt] == 1:
                    cycle = [node]
                    cur = node
                    while cur != nxt:
                        cur = parent[cur]
                        cycle.append(cur)
                    cycle.reverse()
                    return cycle
            if not advanced:
                color[node] = 2
                stack.pop()
    return None


def _cancel_cycles(market: FinancialMarket, allowed) -> tuple[FinancialMarket, Compression]:
    n = market.n
    liab = [list(row) for row in market.liabilities]
    total = Compression.zero(n)
    while True:
        cycle = _find_cycle(liab, allowed)
        if cycle is None:
            break
        eps = min(liab[i][cycle[(k + 1) % len(cycle)]] for k, i in enumerate(cycle))
        step = cycle_indicator(n, cycle, eps)
        for k, i in enumerate(cycle):
            j = cycle[(k + 1) % len(cycle)]
            liab[i][j] -= eps
        total = total + step
    residual = apply_compression(market, total)
    return residual, total


def greedy_compress(market: FinancialMarket) -> tuple[Compression, FinancialMarket]:
    """Cancel liability cycles at their bottleneck value until the residual
    digraph is acyclic.  Requires nonnegative endowments (which guarantee at
    least one solvent bank afterwards: the residual has a sink)."""
    if any(e < 0 for e in market.endowments):
        raise NegativeEndowmentError("greedy compression requires nonnegative endowments")
    residual, total = _cancel_cycles(market, set(range(market.n)))
    return total, residual


def reduce_to_acyclic(market: FinancialMarket, b: int) -> tuple[FinancialMarket, Compression]:
    """Cancel every cycle avoiding bank b; the answer to "can all banks but b
    be saved" is unchanged, and the returned compression composes with any
    later one."""
    allowed = set(range(market.n)) - {b}
    return _cancel_cycles(market, allowed)


# ---------------------------------------------------------------------------
# Flow networks as LPs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlowNetwork:
    """Split network for candidate bank b: source arcs (b+, i), internal arcs
    within the other banks, sink arcs (i, b-).  Capacities are the residual
    liabilities."""

    b: int
    source_arcs: tuple[tuple[int, Fraction], ...]  # (head, capacity)
    sink_arcs: tuple[tuple[int, Fraction], ...]  # (tail, capacity)
    inner_arcs: tuple[tuple[int, int, Fraction], ...]  # (tail, head, capacity)

    @staticmethod
    def build(market: FinancialMarket, b: int) -> "FlowNetwork":
        n = market.n
        src = tuple((j, market.liabilities[b][j]) for j in range(n) if market.liabilities[b][j] > 0)
        snk = tuple((i, market.liabilities[i][b]) for i in range(n) if market.liabilities[i][b] > 0)
        inner = tuple(
            (i, j, market.liabilities[i][j])
            for i in range(n)
            for j in range(n)
            if i != b and j != b and market.liabilities[i][j] > 0
        )
        return FlowNetwork(b, src, snk, inner)

    def nodes(self) -> set[int]:
        out = {j for j, _ in self.source_arcs} | {i for i, _ in self.sink_arcs}
        for i, j, _ in self.inner_arcs:
            out.add(i)
            out.add(j)
        return out


def _src(j: int) -> tuple:
    return ("fs", j)


def _arc(i: int, j: int) -> tuple:
    return ("f", i, j)


def _snk(i: int) -> tuple:
    return ("ft", i)


def _flow_builder(network: FlowNetwork, lower_bounds: Optional[dict] = None, sense=MAX) -> LpBuilder:
    """Variables and conservation constraints shared by all flow LPs."""
    lower_bounds = lower_bounds or {}
    b = LpBuilder(sense)
    for j, cap in network.source_arcs:
        b.var(_src(j), lower_bounds.get(("source", j), ZERO), cap)
    for i, j, cap in network.inner_arcs:
        b.var(_arc(i, j), lower_bounds.get(("inner", i, j), ZERO), cap)
    for i, cap in network.sink_arcs:
        b.var(_snk(i), lower_bounds.get(("sink", i), ZERO), cap)
    for node in sorted(network.nodes()):
        coeffs: dict = {}
        for j, _ in network.source_arcs:
            if j == node:
                coeffs[_src(j)] = coeffs.get(_src(j), ZERO) + 1
        for i, j, _ in network.inner_arcs:
            if j == node:
                coeffs[_arc(i, j)] = coeffs.get(_arc(i, j), ZERO) + 1
            if i == node:
                coeffs[_arc(i, j)] = coeffs.get(_arc(i, j), ZERO) - 1
        for i, _ in network.sink_arcs:
            if i == node:
                coeffs[_snk(i)] = coeffs.get(_snk(i), ZERO) - 1
        if coeffs:
            b.add(coeffs, EQ, ZERO)
    return b


def _size_coeffs(network: FlowNetwork) -> dict:
    return {_src(j): ONE for j, _ in network.source_arcs}


def flow_lp(network: FlowNetwork, size_target, lower_bounds: Optional[dict] = None):
    """Find a feasible flow of the given size ("max" maximizes instead).

    Returns a dict of flow values keyed like the LP variables, or None when
    no such flow exists.
    """
    if lower_bounds:
        caps = {("source", j): cap for j, cap in network.source_arcs}
        caps.update({("sink", i): cap for i, cap in network.sink_arcs})
        caps.update({("inner", i, j): cap for i, j, cap in network.inner_arcs})
        for key, lb in lower_bounds.items():
            if key in caps and lb > caps[key]:
                return None
    maximize = size_target == "max"
    builder = _flow_builder(network, lower_bounds, MAX if maximize else MIN)
    size = _size_coeffs(network)
    if maximize:
        builder.objective(size)
    else:
        if size:
            builder.add(size, EQ, size_target)
        elif size_target != 0:
            return None
        builder.objective({})
    outcome = solve_lp(builder.build())
    if not outcome.is_optimal:
        return None
    return outcome.assignment


def flow_to_compression(market: FinancialMarket, network: FlowNetwork, flow: dict) -> Compression:
    n = market.n
    rows = [[ZERO] * n for _ in range(n)]
    b = network.b
    for j, _ in network.source_arcs:
        rows[b][j] = flow[_src(j)]
    for i, _ in network.sink_arcs:
        rows[i][b] = flow[_snk(i)]
    for i, j, _ in network.inner_arcs:
        rows[i][j] = flow[_arc(i, j)]
    return Compression.create(rows)


# ---------------------------------------------------------------------------
# Save all but one
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SaveTarget:
    """Candidate defaulter b with the partition of the other banks into fully
    paid creditors, the pro-rata group, and unpaid banks."""

    b: int
    gamma: int
    n_plus: tuple[int, ...]
    n_prop: tuple[int, ...]
    n_zero: tuple[int, ...]


@dataclass(frozen=True)
class ResidualDemand:
    """Per-bank payment needed from b to stay solvent, with its aggregates."""

    q: dict[int, Fraction]
    a_b: Fraction
    l_out: Fraction
    l_prop: Fraction
    q_prop: Fraction
    q_zero: Fraction


@dataclass(frozen=True)
class SaveWitness:
    defaulter: Optional[int]  # None when nobody defaults
    compression: Compression
    clearing: ClearingVector
    report: DefaultReport


def _targets(market: FinancialMarket, model: str, b: int):
    if model == PROPORTIONAL:
        creditors = tuple(j for j in range(market.n) if market.liabilities[b][j] > 0)
        yield SaveTarget(b, 0, (), creditors, ())
        return
    groups = market.priorities[b]
    k = len(groups)
    for gamma in range(k, -1, -1):
        n_plus = tuple(j for g in groups[:gamma] for j in g)
        n_prop = tuple(groups[gamma]) if gamma < k else ()
        n_zero = tuple(j for g in groups[gamma + 1 :] for j in g)
        yield SaveTarget(b, gamma, n_plus, n_prop, n_zero)


def _residual_demand(market: FinancialMarket, target: SaveTarget) -> Optional[ResidualDemand]:
    """q_i on the cycle-reduced market; None when some bank needs more from b
    than b even owes it (then b cannot be the only defaulter)."""
    n = market.n
    b = target.b
    q: dict[int, Fraction] = {}
    for i in range(n):
        if i == b:
            continue
        need = market.total_liability(i) - market.endowments[i]
        need -= sum(market.liabilities[j][i] for j in range(n) if j != b)
        qi = max(ZERO, need)
        if qi > market.liabilities[b][i]:
            return None
        q[i] = qi
    a_b = market.alpha[b] * market.endowments[b]
    a_b += market.beta[b] * sum(market.liabilities[i][b] for i in range(n) if i != b)
    a_b -= sum(market.liabilities[b][i] for i in target.n_plus)
    return ResidualDemand(
        q=q,
        a_b=a_b,
        l_out=market.total_liability(b),
        l_prop=sum((market.liabilities[b][i] for i in target.n_prop), ZERO),
        q_prop=sum((q[i] for i in target.n_prop), ZERO),
        q_zero=sum((q[i] for i in target.n_zero), ZERO),
    )


def _pins(target: SaveTarget, demand: ResidualDemand) -> dict:
    return {("source", i): demand.q[i] for i in target.n_zero}


GRID_SIZE_CAP = 257


def _grid_sizes(market: FinancialMarket, max_size: Fraction) -> list[Fraction]:
    """Flow sizes on the liability grid, capped; a compression whose values
    sit on the grid has a grid-valued size, so testing these sizes finds
    every grid-representable witness."""
    from .milp import choose_scale

    try:
        scale = choose_scale(market)
    except Exception:
        return []
    count = int(max_size * scale) + 1
    if count > GRID_SIZE_CAP:
        return []
    return [Fraction(k, scale) for k in range(count)]


def _solvency_rows_beta1(builder, market, target, demand):
    """Linear reformulation of the pro-rata solvency conditions when
    beta_b = 1: the quadratic terms cancel, as does the flow into the fully
    paid groups (it raises b's income and its obligations equally)."""
    a_eff = demand.a_b - demand.q_zero
    for i in target.n_prop:
        lbi = market.liabilities[target.b][i]
        coeffs: dict = {}
        for j in target.n_prop:
            coeffs[_src(j)] = coeffs.get(_src(j), ZERO) + demand.q[i] - lbi
        key = _src(i)
        coeffs[key] = coeffs.get(key, ZERO) + demand.l_prop - a_eff
        builder.add(coeffs, GE, demand.q[i] * demand.l_prop - lbi * a_eff)
    if target.n_prop or target.n_zero:
        # what flows past the fully paid groups must be affordable
        coeffs = {_src(i): ONE for i in target.n_prop}
        for i in target.n_zero:
            coeffs[_src(i)] = ONE
        builder.add(coeffs, LE, demand.a_b)


def _solvency_rows_fixed_size(builder, market, target, demand, size) -> bool:
    """Rows for a known flow size s and beta_b < 1: the affordability bound
    on the fully paid groups plus the per-bank pro-rata lower bounds, both
    linear once s is fixed.  Returns False when the guess is outright
    impossible (shortfall with no fully paid group to absorb it)."""
    b = target.b
    beta = market.beta[b]
    base = demand.a_b - beta * size
    if target.n_plus:
        builder.add({_src(j): ONE for j in target.n_plus}, GE, beta * size - demand.a_b)
    elif base < 0:
        return False
    for i in target.n_prop:
        lbi = market.liabilities[b][i]
        coeffs: dict = {}
        for j in target.n_plus:
            coeffs[_src(j)] = coeffs.get(_src(j), ZERO) + lbi
        for j in target.n_prop:
            coeffs[_src(j)] = coeffs.get(_src(j), ZERO) + demand.q[i]
        key = _src(i)
        coeffs[key] = coeffs.get(key, ZERO) + demand.l_prop - base - (size - demand.q_zero)
        rhs = demand.q[i] * demand.l_prop - lbi * base
        builder.add(coeffs, GE, rhs)
    return True


def _candidate_flows(market: FinancialMarket, network: FlowNetwork, target, demand):
    """Yield candidate flows for one (b, gamma) guess, cheapest test first."""
    b = target.b
    beta = market.beta[b]
    pins = _pins(target, demand)

    if beta == 1:
        builder = _flow_builder(network, pins, MIN)
        _solvency_rows_beta1(builder, market, target, demand)
        builder.objective(_size_coeffs(network))
        outcome = solve_lp(builder.build())
        if outcome.is_optimal:
            yield outcome.assignment
    else:
        builder = _flow_builder(network, pins, MAX)
        builder.objective(_size_coeffs(network))
        outcome = solve_lp(builder.build())
        if not outcome.is_optimal:
            return
        max_flow = outcome.assignment
        max_size = sum((max_flow[_src(j)] for j, _ in network.source_arcs), ZERO)

        # full-coverage shortcut: with this much flow the pro-rata group is
        # paid in full, which makes every solvency condition hold
        threshold = (demand.l_prop - demand.a_b + demand.q_zero) / (1 - beta)
        if max_size >= threshold:
            yield max_flow

        # Candidate sizes.  The maximum size and the closed form cover the
        # interior cases; the all-tight argument behind the closed form says
        # nothing once some source arc bottoms out at zero, so sizes below it
        # can be the only valid ones (an interval of them, by a flow-descent
        # argument).  Zero and the liability-grid sizes make the search
        # complete for every witness whose values live on the grid.
        sizes = [max_size]
        closed_form = (
            demand.q_prop + beta * demand.q_zero - demand.a_b
        ) / (1 - beta) + demand.q_zero
        sizes.append(closed_form)
        sizes.append(ZERO)
        sizes.extend(_grid_sizes(market, max_size))
        seen = set()
        for size in sizes:
            if size < 0 or size > max_size or size in seen:
                continue
            seen.add(size)
            builder = _flow_builder(network, pins, MIN)
            sz = _size_coeffs(network)
            if sz:
                builder.add(sz, EQ, size)
            elif size != 0:
                continue
            if not _solvency_rows_fixed_size(builder, market, target, demand, size):
                continue
            builder.objective({})
            outcome = solve_lp(builder.build())
            if outcome.is_optimal:
                yield outcome.assignment

    if not target.n_plus:
        # fallback for the corner where b ends up paying nothing at all (its
        # usable income is negative): compression alone must cover every
        # residual demand, which neither case split above encodes
        bounds = dict(pins)
        for j, cap in network.source_arcs:
            bounds[("source", j)] = max(bounds.get(("source", j), ZERO), demand.q[j])
        if all(
            bounds.get(("source", j), ZERO) <= cap for j, cap in network.source_arcs
        ):
            builder = _flow_builder(network, bounds, MIN)
            builder.objective(_size_coeffs(network))
            outcome = solve_lp(builder.build())
            if outcome.is_optimal:
                yield outcome.assignment


def _verify(market: FinancialMarket, compression: Compression, b: Optional[int]):
    compressed = apply_compression(market, compression)
    payments, _ = clear_priority_proportional(compressed)
    result = check_clearing(compressed, payments, PRIORITY)
    assert isinstance(result, DefaultReport), result
    allowed = set() if b is None else {b}
    if set(result.defaulting) <= allowed:
        return SaveWitness(b, compression, payments, result)
    return None


def save_all_but_one(market: FinancialMarket, model: str = PROPORTIONAL) -> Optional[SaveWitness]:
    """Witness (b, C, p) such that clearing market - C defaults at most bank
    b, or None when every compression leaves two or more defaults."""
    if model not in (PROPORTIONAL, PRIORITY):
        raise ValueError(f"unknown model {model!r}")
    if model == PROPORTIONAL and any(market.group_count(i) > 1 for i in range(market.n)):
        raise ValueError("proportional decider requires single-group priorities")

    # zero defaults happen iff full payment clears the original market
    p_full = full_payment(market)
    result = check_clearing(market, p_full, PRIORITY)
    if isinstance(result, DefaultReport) and not result.defaulting:
        return SaveWitness(None, Compression.zero(market.n), p_full, result)

    for b in range(market.n):
        reduced, c_acyclic = reduce_to_acyclic(market, b)
        network = FlowNetwork.build(reduced, b)
        for target in _targets(reduced, model, b):
            demand = _residual_demand(reduced, target)
            if demand is None:
                break  # q_i > L_bi does not depend on gamma: next b
            for flow in _candidate_flows(reduced, network, target, demand):
                compression = c_acyclic + flow_to_compression(reduced, network, flow)
                witness = _verify(market, compression, b)
                if witness is not None:
                    return witness
    return None
