"""Independent brute-force oracles used by the test suite.

These deliberately avoid the library's simplex/branch-and-bound paths: the LP
oracle enumerates basic solutions from n-subsets of tight constraints via
exact Gaussian elimination, and the circulation oracle enumerates integer
compressions arc by arc.
"""

from __future__ import annotations

import itertools
from fractions import Fraction as F

from netclear.lp import EQ, GE, LE, LpProblem


def solve_square(rows: list[list[F]], rhs: list[F]):
    """Exact Gaussian elimination; None when singular."""
    n = len(rows)
    a = [list(map(F, row)) + [F(rhs[i])] for i, row in enumerate(rows)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def enumerate_lp_vertices(problem: LpProblem, box=None):
    """Best objective over all basic solutions (n-subsets of tight rows).

    `box` adds |x_j| <= box for every variable, turning the polyhedron into a
    polytope: solving with two box sizes tells bounded and unbounded LPs
    apart (the boxed optimum keeps improving only along a recession ray).
    Returns the optimal value or "infeasible".
    """
    var_ids = [v.id for v in problem.variables]
    n = len(var_ids)
    pos = {vid: k for k, vid in enumerate(var_ids)}

    rows: list[tuple[list[F], F, str]] = []
    for c in problem.constraints:
        row = [F(0)] * n
        for vid, a in c.coeffs:
            row[pos[vid]] += a
        rows.append((row, c.rhs, c.relation))
    for v in problem.variables:
        unit = [F(0)] * n
        unit[pos[v.id]] = F(1)
        lo, hi = v.lower, v.upper
        if box is not None:
            lo = -F(box) if lo is None else lo
            hi = F(box) if hi is None else hi
        if lo is not None:
            rows.append((unit, lo, GE))
        if hi is not None:
            rows.append((unit, hi, LE))

    def feasible(point) -> bool:
        for row, rhs, rel in rows:
            lhs = sum(a * x for a, x in zip(row, point))
            if rel == LE and lhs > rhs:
                return False
            if rel == GE and lhs < rhs:
                return False
            if rel == EQ and lhs != rhs:
                return False
        return True

    obj = [F(0)] * n
    for vid, a in problem.objective.coeffs:
        obj[pos[vid]] += a
    sense = problem.objective.sense

    best = None
    found_feasible = False
    for subset in itertools.combinations(range(len(rows)), n):
        point = solve_square([rows[k][0] for k in subset], [rows[k][1] for k in subset])
        if point is None or not feasible(point):
            continue
        found_feasible = True
        value = sum(c * x for c, x in zip(obj, point))
        if best is None or (sense == "min" and value < best) or (
            sense == "max" and value > best
        ):
            best = value
    if not found_feasible:
        if n == 0:
            return F(0)
        return "infeasible"
    return best


def lp_oracle_verdict(problem: LpProblem):
    """('infeasible', None) | ('unbounded', None) | ('optimal', value).

    Small integer data keeps every vertex of the unboxed polyhedron well
    inside the smaller box, so a strictly better boxed optimum at the larger
    box certifies a recession ray.
    """
    v1 = enumerate_lp_vertices(problem, box=10**5)
    if v1 == "infeasible":
        return "infeasible", None
    v2 = enumerate_lp_vertices(problem, box=10**7)
    if v2 != v1:
        return "unbounded", None
    return "optimal", v1


def enumerate_integer_circulations(market):
    """All integer compressions 0 <= C <= L with conservation at every bank.

    Works on the cyclic core (arcs on directed cycles); everything off-core is
    forced to zero.  Yields n x n tuples of Fractions.
    """
    n = market.n
    liab = market.liabilities

    # iteratively strip nodes that cannot be on a cycle
    alive = set(range(n))
    changed = True
    while changed:
        changed = False
        for i in list(alive):
            has_out = any(liab[i][j] > 0 and j in alive for j in alive)
            has_in = any(liab[j][i] > 0 and j in alive for j in alive)
            if not (has_out and has_in):
                alive.discard(i)
                changed = True
    core_arcs = [
        (i, j) for i in sorted(alive) for j in sorted(alive) if liab[i][j] > 0
    ]

    def balanced_prefix(values, k) -> bool:
        # nodes whose incident core arcs are all among the first k must balance
        assigned = core_arcs[:k]
        touched = {i for a in assigned for i in a}
        for node in touched:
            remaining = any(
                node in arc for arc in core_arcs[k:]
            )
            if remaining:
                continue
            net = sum(v for (i, j), v in zip(assigned, values) if i == node) - sum(
                v for (i, j), v in zip(assigned, values) if j == node
            )
            if net != 0:
                return False
        return True

    results = []

    def rec(k, values):
        if not balanced_prefix(values, k):
            return
        if k == len(core_arcs):
            rows = [[F(0)] * n for _ in range(n)]
            for (i, j), v in zip(core_arcs, values):
                rows[i][j] = F(v)
            results.append(tuple(tuple(r) for r in rows))
            return
        i, j = core_arcs[k]
        for v in range(int(liab[i][j]) + 1):
            rec(k + 1, values + [v])

    rec(0, [])
    return results
