"""Exact LP and MILP solving.

LpProblem holds bounded variables, sparse linear constraints, and an
objective; solve_lp answers with an exact rational optimum or a certified
Infeasible/Unbounded verdict.  MilpProblem adds a set of binary variables,
solved by best-bound branch-and-bound with branching on the most fractional
binary (ties by lowest variable id), each node LP being solve_lp on the
relaxation with the branching bounds applied.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Mapping, Optional

from . import simplex
from .errors import MalformedProblemError, NodeBudgetExceededError
from .rational import format_rational
from .simplex import BoundedSimplex, to_q

MIN = "min"
MAX = "max"
LE = "<="
EQ = "="
GE = ">="

OPTIMAL = simplex.OPTIMAL
INFEASIBLE = simplex.INFEASIBLE
UNBOUNDED = simplex.UNBOUNDED

DEFAULT_NODE_BUDGET = 200_000


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


@dataclass(frozen=True)
class Variable:
    id: Hashable
    lower: Optional[Fraction]  # None = -inf
    upper: Optional[Fraction]  # None = +inf


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[tuple[Hashable, Fraction], ...]
    relation: str
    rhs: Fraction


@dataclass(frozen=True)
class Objective:
    sense: str
    coeffs: tuple[tuple[Hashable, Fraction], ...]


@dataclass(frozen=True)
class LpProblem:
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: Objective

    def var_ids(self) -> list[Hashable]:
        return [v.id for v in self.variables]


@dataclass(frozen=True)
class MilpProblem:
    base: LpProblem
    binaries: frozenset[Hashable]


@dataclass(frozen=True)
class LpOutcome:
    status: str
    assignment: Optional[dict]  # id -> Fraction, when Optimal
    objective: Optional[Fraction]
    nodes: int = 0  # branch-and-bound nodes solved (0 for plain LPs)

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


class LpBuilder:
    """Ergonomic constructor for LpProblem/MilpProblem."""

    def __init__(self, sense: str = MIN):
        if sense not in (MIN, MAX):
            raise MalformedProblemError(f"bad sense {sense!r}")
        self.sense = sense
        self._vars: list[Variable] = []
        self._seen: set = set()
        self._cons: list[Constraint] = []
        self._obj: dict = {}
        self._binaries: set = set()

    def var(self, vid, lower=0, upper=None):
        if vid in self._seen:
            raise MalformedProblemError(f"duplicate variable {vid!r}")
        lo = None if lower is None else _frac(lower)
        hi = None if upper is None else _frac(upper)
        self._vars.append(Variable(vid, lo, hi))
        self._seen.add(vid)
        return vid

    def binary(self, vid):
        self.var(vid, 0, 1)
        self._binaries.add(vid)
        return vid

    def add(self, coeffs: Mapping, relation: str, rhs):
        if relation not in (LE, EQ, GE):
            raise MalformedProblemError(f"bad relation {relation!r}")
        items = tuple((k, _frac(v)) for k, v in coeffs.items() if v != 0)
        self._cons.append(Constraint(items, relation, _frac(rhs)))

    def objective(self, coeffs: Mapping):
        self._obj = {k: _frac(v) for k, v in coeffs.items() if v != 0}

    def add_objective_term(self, vid, coeff):
        self._obj[vid] = self._obj.get(vid, Fraction(0)) + _frac(coeff)

    def build(self) -> LpProblem:
        prob = LpProblem(
            tuple(self._vars),
            tuple(self._cons),
            Objective(self.sense, tuple(self._obj.items())),
        )
        validate_problem(prob)
        return prob

    def build_milp(self) -> MilpProblem:
        return MilpProblem(self.build(), frozenset(self._binaries))


def validate_problem(problem: LpProblem) -> None:
    ids = set()
    for v in problem.variables:
        if v.id in ids:
            raise MalformedProblemError(f"duplicate variable {v.id!r}")
        ids.add(v.id)
        if v.lower is not None and v.upper is not None and v.lower > v.upper:
            raise MalformedProblemError(f"variable {v.id!r} has lower > upper")
    for c in problem.constraints:
        for vid, _ in c.coeffs:
            if vid not in ids:
                raise MalformedProblemError(f"constraint references unknown {vid!r}")
    for vid, _ in problem.objective.coeffs:
        if vid not in ids:
            raise MalformedProblemError(f"objective references unknown {vid!r}")


# ---------------------------------------------------------------------------
# Standard-form transformation
# ---------------------------------------------------------------------------


@dataclass
class _StandardForm:
    """Cached shift/mirror/split transformation of an LpProblem.

    terms maps each variable id to ((column, sign, offset), ...) with
    x = sum(sign * column) + offset; all columns live in [0, upper].
    """

    problem: LpProblem
    terms: dict
    uppers: list
    rows: list
    rhs: list
    slack_of_row: list
    cost: dict


def _transform(problem: LpProblem) -> _StandardForm:
    terms: dict = {}
    uppers: list = []

    def new_col(upper) -> int:
        uppers.append(None if upper is None else to_q(upper))
        return len(uppers) - 1

    for v in problem.variables:
        lo, hi = v.lower, v.upper
        if lo is not None:
            width = None if hi is None else hi - lo
            c = new_col(width)
            terms[v.id] = ((c, 1, lo),)
        elif hi is not None:
            c = new_col(None)
            terms[v.id] = ((c, -1, hi),)
        else:
            cp = new_col(None)
            cm = new_col(None)
            terms[v.id] = ((cp, 1, 0), (cm, -1, 0))

    def _offset(tlist):
        return tlist[0][2] if len(tlist) == 1 else Fraction(0)

    rows: list[dict] = []
    rhs: list = []
    slack_of_row: list = []
    for con in problem.constraints:
        row: dict = {}
        shift = Fraction(0)
        for vid, a in con.coeffs:
            for col, sign, off in terms[vid]:
                val = row.get(col, simplex.Q0) + to_q(a * sign)
                if val:
                    row[col] = val
                elif col in row:
                    del row[col]
            shift += a * _offset(terms[vid])
        b = con.rhs - shift
        rel = con.relation
        if rel == GE:
            row = {j: -a for j, a in row.items()}
            b = -b
            rel = LE
        if rel == LE:
            s = new_col(None)
            row[s] = simplex.Q1
            slack_of_row.append(s)
        else:
            slack_of_row.append(None)
        rows.append(row)
        rhs.append(to_q(b))

    sense = problem.objective.sense
    cost: dict = {}
    for vid, a in problem.objective.coeffs:
        aa = a if sense == MIN else -a
        for col, sign, off in terms[vid]:
            val = cost.get(col, simplex.Q0) + to_q(aa * sign)
            if val:
                cost[col] = val
            elif col in cost:
                del cost[col]

    return _StandardForm(problem, terms, uppers, rows, rhs, slack_of_row, cost)


def _solve_std(std: _StandardForm, fixes: Optional[dict] = None):
    """Run the simplex on the cached form, with `fixes` pinning single-column
    variables (branch-and-bound fixings) to constant values.

    Returns (status, assignment, objective, reduced_costs) where the last is
    the optimal reduced-cost row keyed by column."""
    fixed_cols: dict = {}
    uppers = list(std.uppers)
    rhs = list(std.rhs)
    if fixes:
        for vid, value in fixes.items():
            (col, sign, off), = std.terms[vid]  # binaries are single-column
            w = to_q((_frac(value) - off) * sign)
            fixed_cols[col] = w
            uppers[col] = simplex.Q0
        for r, row in enumerate(std.rows):
            adjust = simplex.Q0
            for col, w in fixed_cols.items():
                if w and col in row:
                    adjust += row[col] * w
            if adjust:
                rhs[r] = rhs[r] - adjust

    solver = BoundedSimplex(len(uppers), uppers, std.rows, rhs, std.slack_of_row)
    status, x, rc = solver.solve(std.cost)
    if status != OPTIMAL:
        return status, None, None, None

    problem = std.problem
    assignment: dict = {}
    for v in problem.variables:
        total = Fraction(0)
        for col, sign, off in std.terms[v.id]:
            val = fixed_cols.get(col)
            if val is None:
                val = x[col]
            total += sign * simplex.q_to_fraction(val) + off
        assignment[v.id] = total
    objective = sum(
        (a * assignment[vid] for vid, a in problem.objective.coeffs), Fraction(0)
    )
    return OPTIMAL, assignment, objective, rc


def solve_lp(problem: LpProblem) -> LpOutcome:
    """Exact optimum or a correct Infeasible/Unbounded verdict."""
    validate_problem(problem)
    status, assignment, objective, _ = _solve_std(_transform(problem))
    if status != OPTIMAL:
        return LpOutcome(status, None, None)
    return LpOutcome(OPTIMAL, assignment, objective)


# ---------------------------------------------------------------------------
# Branch and bound
# ---------------------------------------------------------------------------


def _objective_integral_at_integer_points(problem: LpProblem, binaries) -> bool:
    """True when the objective is guaranteed integral once binaries are
    integral, enabling ceil-based pruning."""
    for vid, a in problem.objective.coeffs:
        if vid not in binaries or a.denominator != 1:
            return False
    return True


def solve_milp(
    problem: MilpProblem,
    node_budget: int = DEFAULT_NODE_BUDGET,
    time_budget: Optional[float] = None,
    branch_ranks: Optional[dict] = None,
) -> LpOutcome:
    """Best-bound branch-and-bound over the binary variables.

    Branches on the most fractional binary (distance to the nearest integer),
    ties broken by the earliest declared variable; each node solves the LP
    relaxation with the branch fixings applied.  Exceeding `node_budget`
    solved nodes or `time_budget` seconds raises NodeBudgetExceededError.

    `branch_ranks` optionally partitions the binaries into priority classes
    (lower rank branches first; the most-fractional rule applies within the
    front class).  Callers whose models have structurally decisive binaries
    use this to keep trees small; the optimum is unaffected.
    """
    base = problem.base
    validate_problem(base)
    order = {v.id: k for k, v in enumerate(base.variables)}
    for b in problem.binaries:
        if b not in order:
            raise MalformedProblemError(f"binary {b!r} is not a declared variable")
        var = base.variables[order[b]]
        if var.lower != 0 or var.upper != 1:
            raise MalformedProblemError(f"binary {b!r} must have bounds [0,1]")
    binaries = sorted(problem.binaries, key=order.__getitem__)
    sense = base.objective.sense
    sign = 1 if sense == MIN else -1  # compare in minimization space
    integral_obj = _objective_integral_at_integer_points(base, problem.binaries)
    std = _transform(base)
    ranks = branch_ranks or {}
    default_rank = ()

    start = time.monotonic()
    incumbent: Optional[dict] = None
    incumbent_val: Optional[Fraction] = None  # in min space
    nodes_solved = 0
    counter = 0
    # best-bound selection; among equal bounds the newest node wins, which
    # dives to integral leaves quickly and lets the ceil-pruning bite
    heap: list = [(None, 0, {})]

    def beats_incumbent(bound: Fraction) -> bool:
        """Could a node with this bound still improve on the incumbent?"""
        if incumbent_val is None:
            return True
        if integral_obj:
            # optimal integral value >= ceil(bound)
            return math.ceil(bound) < incumbent_val
        return bound < incumbent_val

    while heap:
        parent_bound, _, fixes = heapq.heappop(heap)
        if parent_bound is not None and not beats_incumbent(parent_bound):
            continue
        if nodes_solved >= node_budget:
            raise NodeBudgetExceededError(
                f"branch-and-bound node budget of {node_budget} exhausted"
            )
        if time_budget is not None and time.monotonic() - start > time_budget:
            raise NodeBudgetExceededError(
                f"branch-and-bound time budget of {time_budget}s exhausted"
            )
        status, assignment, objective, rc = _solve_std(std, fixes)
        nodes_solved += 1
        if status == UNBOUNDED:
            return LpOutcome(UNBOUNDED, None, None, nodes_solved)
        if status == INFEASIBLE:
            continue
        bound = sign * objective
        if not beats_incumbent(bound):
            continue

        frac_var = None
        frac_key = None
        for pos, b in enumerate(binaries):
            val = assignment[b]
            if val.denominator == 1:
                continue
            f = val - (val.numerator // val.denominator)
            key = (ranks.get(b, default_rank), -min(f, 1 - f), pos)
            if frac_key is None or key < frac_key:
                frac_var, frac_key = b, key
        if frac_var is None:
            if incumbent_val is None or bound < incumbent_val:
                incumbent = assignment
                incumbent_val = bound
            continue

        child_base = dict(fixes)
        child_base[frac_var] = None  # placeholder, filled per child below
        if incumbent_val is not None:
            # reduced-cost fixing: flipping a nonbasic binary costs at least
            # its reduced cost on top of this node's bound, so flips that
            # cannot beat the incumbent are ruled out for the whole subtree
            for b in binaries:
                if b in child_base:
                    continue
                val = assignment[b]
                if val.denominator != 1:
                    continue
                col_rc = rc.get(std.terms[b][0][0])
                if not col_rc:
                    continue
                flip_cost = simplex.q_to_fraction(col_rc if val == 0 else -col_rc)
                if flip_cost > 0 and not beats_incumbent(bound + flip_cost):
                    child_base[b] = int(val)
        for value in (0, 1):
            counter += 1
            child = dict(child_base)
            child[frac_var] = value
            heapq.heappush(heap, (bound, -counter, child))

    if incumbent is None:
        return LpOutcome(INFEASIBLE, None, None, nodes_solved)
    return LpOutcome(OPTIMAL, incumbent, sign * incumbent_val, nodes_solved)


# ---------------------------------------------------------------------------
# Certification and debug dump
# ---------------------------------------------------------------------------


def certify(problem, outcome: LpOutcome) -> bool:
    """Exactly re-check an Optimal outcome against every bound, constraint,
    and (for MILPs) integrality requirement."""
    if isinstance(problem, MilpProblem):
        base, binaries = problem.base, problem.binaries
    else:
        base, binaries = problem, frozenset()
    if not outcome.is_optimal or outcome.assignment is None:
        return False
    assignment = outcome.assignment
    for v in base.variables:
        val = assignment.get(v.id)
        if val is None:
            return False
        if v.lower is not None and val < v.lower:
            return False
        if v.upper is not None and val > v.upper:
            return False
        if v.id in binaries and val not in (0, 1):
            return False
    for c in base.constraints:
        lhs = sum((a * assignment[vid] for vid, a in c.coeffs), Fraction(0))
        if c.relation == LE and lhs > c.rhs:
            return False
        if c.relation == GE and lhs < c.rhs:
            return False
        if c.relation == EQ and lhs != c.rhs:
            return False
    value = sum(
        (a * assignment[vid] for vid, a in base.objective.coeffs), Fraction(0)
    )
    return value == outcome.objective


def dump_problem(problem) -> str:
    """Plain-text rendering (exact fractions) for external cross-checking."""
    if isinstance(problem, MilpProblem):
        base, binaries = problem.base, problem.binaries
    else:
        base, binaries = problem, frozenset()
    lines = [f"{base.objective.sense}:"]
    lines.append(
        "  " + " + ".join(f"{format_rational(a)} {vid}" for vid, a in base.objective.coeffs)
    )
    lines.append("subject to:")
    for k, c in enumerate(base.constraints):
        lhs = " + ".join(f"{format_rational(a)} {vid}" for vid, a in c.coeffs)
        lines.append(f"  c{k}: {lhs} {c.relation} {format_rational(c.rhs)}")
    lines.append("bounds:")
    for v in base.variables:
        lo = "-inf" if v.lower is None else format_rational(v.lower)
        hi = "+inf" if v.upper is None else format_rational(v.upper)
        mark = " binary" if v.id in binaries else ""
        lines.append(f"  {lo} <= {v.id} <= {hi}{mark}")
    return "\n".join(lines)
