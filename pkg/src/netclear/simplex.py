"""Exact two-phase simplex over rationals with bounded variables.

Internal engine behind `netclear.lp.solve_lp`.  Works on a standard form

    min  c.x   s.t.  A x = b,   0 <= x_j <= u_j   (u_j may be +inf)

with sparse rows.  Bland's smallest-index rule is used for both the entering
and leaving choices, which guarantees termination; all arithmetic is exact
(gmpy2.mpq when available, fractions.Fraction otherwise), so optima and
infeasibility verdicts are never approximate.
"""

from __future__ import annotations

from fractions import Fraction

try:
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _Q = Fraction

Q0 = _Q(0)
Q1 = _Q(1)

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"


def to_q(value) -> "_Q":
    if isinstance(value, int):
        return _Q(value)
    return _Q(value.numerator, value.denominator)


def q_to_fraction(value) -> Fraction:
    return Fraction(int(value.numerator), int(value.denominator))


class BoundedSimplex:
    """One-shot solver; build with rows/costs, call solve()."""

    def __init__(self, ncols, uppers, rows, rhs, slack_of_row):
        # uppers[j] is an mpq or None (+inf); every column has lower bound 0.
        self.ncols = ncols
        self.upper = list(uppers)
        self.rows = [dict(r) for r in rows]
        self.rhs = [to_q(v) for v in rhs]
        self.slack_of_row = list(slack_of_row)
        self.m = len(self.rows)
        self.basis: list[int] = [-1] * self.m
        self.row_of: dict[int, int] = {}
        self.at_upper: set[int] = set()
        self.xb: list = [Q0] * self.m
        self.artificials: set[int] = set()
        self.dead_rows: set[int] = set()

    # -- setup ------------------------------------------------------------

    def _install_basis(self):
        """Choose slack columns as the starting basis where the resulting
        basic value is feasible; otherwise add an artificial column."""
        for r in range(self.m):
            b = self.rhs[r]
            slack = self.slack_of_row[r]
            if slack is not None and b >= 0:
                self.basis[r] = slack
                self.xb[r] = b
                continue
            if b < 0:
                self.rows[r] = {j: -a for j, a in self.rows[r].items()}
                self.rhs[r] = -b
            art = self.ncols
            self.ncols += 1
            self.upper.append(None)
            self.rows[r][art] = Q1
            self.artificials.add(art)
            self.basis[r] = art
            self.xb[r] = self.rhs[r]
        for r, j in enumerate(self.basis):
            self.row_of[j] = r

    # -- pivoting ---------------------------------------------------------

    def _column(self, e):
        rows = self.rows
        return [(r, rows[r][e]) for r in range(self.m) if e in rows[r]]

    def _pivot(self, zrow, e, entering_from_upper):
        """One simplex step for entering column e.  Returns 'flip' for a pure
        bound flip, 'degenerate' for a zero-length basis change, 'improved'
        for a strict step, or 'unbounded'."""
        t = -1 if entering_from_upper else 1
        col = self._column(e)

        theta = None            # best step length
        block_var = None        # variable index achieving it (Bland tie-break)
        block_row = None
        ue = self.upper[e]
        if ue is not None:
            theta, block_var, block_row = ue, e, None
        for r, a in col:
            if r in self.dead_rows:
                continue
            d = -a * t  # rate of change of the basic variable of row r
            if d < 0:
                cand = self.xb[r] / (-d)
            elif d > 0:
                ub = self.upper[self.basis[r]]
                if ub is None:
                    continue
                cand = (ub - self.xb[r]) / d
            else:
                continue
            bv = self.basis[r]
            if theta is None or cand < theta or (cand == theta and bv < block_var):
                theta, block_var, block_row = cand, bv, r

        if theta is None:
            return "unbounded"

        if block_row is None:
            # entering variable runs to its opposite bound
            for r, a in col:
                if r not in self.dead_rows:
                    self.xb[r] += (-a * t) * theta
            if entering_from_upper:
                self.at_upper.discard(e)
            else:
                self.at_upper.add(e)
            return "flip"

        rstar = block_row
        leaving = self.basis[rstar]
        arstar = self.rows[rstar][e]
        d_star = -arstar * t
        for r, a in col:
            if r != rstar and r not in self.dead_rows:
                self.xb[r] += (-a * t) * theta
        x_e_new = (ue if entering_from_upper else Q0) + t * theta

        self._eliminate(rstar, e, col, zrow)

        del self.row_of[leaving]
        if d_star > 0:
            self.at_upper.add(leaving)
        self.basis[rstar] = e
        self.row_of[e] = rstar
        self.xb[rstar] = x_e_new
        self.at_upper.discard(e)
        return "improved" if theta > 0 else "degenerate"

    def _eliminate(self, rstar, e, col, zrow):
        """Row-reduce column e to a unit vector at row rstar."""
        rows = self.rows
        prow = rows[rstar]
        piv = prow[e]
        if piv != 1:
            inv = Q1 / piv
            for j in prow:
                prow[j] *= inv
            self.rhs[rstar] *= inv
        prow_items = list(prow.items())
        for r, a_old in col:
            if r == rstar:
                continue
            row = rows[r]
            f = row.get(e)
            if not f:
                continue
            for j, a in prow_items:
                v = row.get(j, Q0) - f * a
                if v:
                    row[j] = v
                elif j in row:
                    del row[j]
            self.rhs[r] -= f * self.rhs[rstar]
        zc = zrow.get(e)
        if zc:
            for j, a in prow_items:
                v = zrow.get(j, Q0) - zc * a
                if v:
                    zrow[j] = v
                elif j in zrow:
                    del zrow[j]

    def _force_pivot(self, r, e, zrow):
        """Relabeling pivot used to drive an artificial out of the basis.

        No value moves: the entering column keeps its current value (0 at
        lower, u_e at upper) and the artificial leaves at its value 0."""
        x_e = self.upper[e] if e in self.at_upper else Q0
        col = self._column(e)
        leaving = self.basis[r]
        self._eliminate(r, e, col, zrow)
        del self.row_of[leaving]
        self.basis[r] = e
        self.row_of[e] = r
        self.at_upper.discard(e)
        self.xb[r] = x_e

    # -- main loop ---------------------------------------------------------

    STALL_LIMIT = 12  # degenerate pivots before switching to Bland's rule

    def _run(self, zrow):
        """Minimize with reduced-cost row zrow until no eligible entering
        column remains.  Returns None or 'unbounded'.

        Entering rule: steepest reduced cost (ties to the lowest index) for
        speed, falling back to Bland's smallest-index rule after a run of
        degenerate pivots; Bland guarantees escape from any cycling, so the
        hybrid terminates on every input and is deterministic.
        """
        at_upper = self.at_upper
        row_of = self.row_of
        upper = self.upper
        stall = 0
        while True:
            bland = stall >= self.STALL_LIMIT
            best = None
            best_rate = None
            for j, rc in zrow.items():
                if j in row_of:
                    continue
                u = upper[j]
                if u is not None and u == 0:
                    continue  # fixed column
                if j in at_upper:
                    if rc <= 0:
                        continue
                    rate = rc
                else:
                    if rc >= 0:
                        continue
                    rate = -rc
                if bland:
                    if best is None or j < best:
                        best = j
                elif best_rate is None or rate > best_rate or (rate == best_rate and j < best):
                    best, best_rate = j, rate
            if best is None:
                return None
            res = self._pivot(zrow, best, best in at_upper)
            if res == "unbounded":
                return "unbounded"
            if res == "degenerate":
                stall += 1
            else:
                stall = 0

    def _reduced_costs(self, cost):
        zrow = {j: to_q(c) for j, c in cost.items() if c}
        for r in range(self.m):
            if r in self.dead_rows:
                continue
            cb = zrow.get(self.basis[r])
            if cb:
                row_items = list(self.rows[r].items())
                for j, a in row_items:
                    v = zrow.get(j, Q0) - cb * a
                    if v:
                        zrow[j] = v
                    elif j in zrow:
                        del zrow[j]
        for j in list(zrow):
            if j in self.row_of:
                del zrow[j]
        return zrow

    def solve(self, cost):
        """Returns (status, x, rc): column values and the final reduced-cost
        row (both None unless Optimal)."""
        self._install_basis()

        if self.artificials:
            phase1 = {a: Q1 for a in self.artificials}
            zrow = self._reduced_costs(phase1)
            res = self._run(zrow)
            if res == "unbounded":  # cannot happen: objective bounded below by 0
                raise AssertionError("phase-1 LP unbounded")
            total = sum(
                (self.xb[r] for r in range(self.m) if self.basis[r] in self.artificials),
                Q0,
            )
            for a in self.artificials:
                if a not in self.row_of and a in self.at_upper:  # pragma: no cover
                    raise AssertionError("artificial at upper bound")
            if total > 0:
                return INFEASIBLE, None, None
            # drive artificials out of the basis, dropping redundant rows
            for r in range(self.m):
                if self.basis[r] not in self.artificials:
                    continue
                target = None
                for j in self.rows[r]:
                    if j not in self.artificials and j != self.basis[r]:
                        target = j if target is None else min(target, j)
                if target is None:
                    del self.row_of[self.basis[r]]
                    self.dead_rows.add(r)
                    self.rows[r] = {}
                    self.rhs[r] = Q0
                    self.basis[r] = -1
                else:
                    self._force_pivot(r, target, {})
            # freeze artificial columns so they can never re-enter
            for a in self.artificials:
                self.upper[a] = Q0

        zrow = self._reduced_costs(cost)
        res = self._run(zrow)
        if res == "unbounded":
            return UNBOUNDED, None, None

        x = [Q0] * self.ncols
        for j in self.at_upper:
            x[j] = self.upper[j]
        for r in range(self.m):
            if r not in self.dead_rows and self.basis[r] >= 0:
                x[self.basis[r]] = self.xb[r]
        return OPTIMAL, x, zrow
