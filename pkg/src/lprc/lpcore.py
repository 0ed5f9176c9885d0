"""Small primal simplex solver with dual prices.

Solves ``max c.x  s.t.  A_eq x = b_eq,  A_le x <= b_le,  0 <= x <= ub`` by a
two-phase tableau method.  The same code runs in floating point (numpy
``float64``) or in exact rational arithmetic (numpy ``object`` arrays of
:class:`fractions.Fraction`).  Every optimal answer is a basic solution and
is checked against primal/dual feasibility, complementary slackness and
strong duality before it is returned.

Entering variables follow Dantzig's rule with lowest-index tie breaking;
after a run of degenerate pivots the solver switches to Bland's rule, which
rules out cycling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

DEFAULT_TOL = 1e-9


class Sense(enum.Enum):
    EQ = "="
    LE = "<="


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LpNumericalError(RuntimeError):
    """Optimality certificates could not be met at the requested tolerance."""


@dataclass
class LpProblem:
    """A maximization LP built row by row.

    ``rows`` hold sparse coefficient dicts ``{var: coef}``.  Upper bounds of
    ``None`` mean the variable is only bounded below by 0.
    """

    objective: list = field(default_factory=list)
    upper: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    senses: list = field(default_factory=list)
    rhs: list = field(default_factory=list)
    var_names: list = field(default_factory=list)
    row_names: list = field(default_factory=list)

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def add_var(self, obj=0, upper=None, name: Optional[str] = None) -> int:
        self.objective.append(obj)
        self.upper.append(upper)
        self.var_names.append(name or f"x{len(self.objective) - 1}")
        return len(self.objective) - 1

    def add_row(self, coefs: dict, sense: Sense, rhs, name: Optional[str] = None) -> int:
        for j in coefs:
            if not 0 <= j < self.n_vars:
                raise ValueError(f"row references undeclared variable {j}")
        self.rows.append(dict(coefs))
        self.senses.append(sense)
        self.rhs.append(rhs)
        self.row_names.append(name or f"r{len(self.rows) - 1}")
        return len(self.rows) - 1


@dataclass
class LpSolution:
    status: Status
    x: Optional[list] = None
    duals: Optional[list] = None
    bound_duals: Optional[list] = None   # one per variable with a finite upper bound
    objective: Optional[object] = None
    basic_vars: tuple = ()
    basic_slacks: tuple = ()
    iterations: int = 0


def _convert(value, exact: bool):
    return Fraction(value) if exact else float(value)


def solve_lp(problem: LpProblem, tol: float = DEFAULT_TOL, exact: bool = False,
             max_iter: int = 100_000, bland_after: int = 50) -> LpSolution:
    """Solve ``problem`` and return a basic optimal solution with duals.

    In exact mode every comparison uses zero tolerance.  Raises
    :class:`LpNumericalError` if the final certificates fail.
    """
    return _Tableau(problem, tol, exact, max_iter, bland_after).solve()


class _Tableau:
    def __init__(self, problem: LpProblem, tol, exact, max_iter, bland_after):
        self.p = problem
        self.exact = exact
        self.tol = 0 if exact else tol
        self.max_iter = max_iter
        self.bland_after = bland_after
        dtype = object if exact else float
        zero = Fraction(0) if exact else 0.0
        one = Fraction(1) if exact else 1.0
        self.zero, self.one = zero, one

        n = problem.n_vars
        # user rows, then one <= row per finite upper bound
        rows = [dict(r) for r in problem.rows]
        senses = list(problem.senses)
        rhs = list(problem.rhs)
        self.bound_rows = []
        for j, ub in enumerate(problem.upper):
            if ub is not None:
                self.bound_rows.append(j)
                rows.append({j: 1})
                senses.append(Sense.LE)
                rhs.append(ub)
        m = len(rows)
        self.n, self.m = n, m
        self.rows_full, self.senses_full = rows, senses
        self.rhs_full = [_convert(v, exact) for v in rhs]
        self.c_full = [_convert(v, exact) for v in problem.objective]

        le_rows = [i for i in range(m) if senses[i] is Sense.LE]
        self.slack_col = {i: n + t for t, i in enumerate(le_rows)}
        ncols = n + len(le_rows)
        self.sign = []
        self.init_col = []
        self.artificial = set()
        for i in range(m):
            s = -1 if self.rhs_full[i] < 0 else 1
            self.sign.append(s)
            if senses[i] is Sense.LE and s == 1:
                self.init_col.append(self.slack_col[i])
            else:
                self.init_col.append(ncols)
                self.artificial.add(ncols)
                ncols += 1
        self.ncols = ncols

        T = np.full((m, ncols), zero, dtype=dtype)
        b = np.full(m, zero, dtype=dtype)
        for i, row in enumerate(rows):
            s = self.sign[i]
            for j, v in row.items():
                T[i, j] = _convert(v, exact) * s
            if i in self.slack_col:
                T[i, self.slack_col[i]] = one * s
            if self.init_col[i] in self.artificial:
                T[i, self.init_col[i]] = one
            b[i] = self.rhs_full[i] * s
        self.T, self.b = T, b
        self.basis = list(self.init_col)
        self.iterations = 0

    # -- pivoting ------------------------------------------------------------

    def _pivot(self, r: int, e: int):
        T, b = self.T, self.b
        piv = T[r, e]
        T[r] = T[r] / piv
        b[r] = b[r] / piv
        col = T[:, e].copy()
        col[r] = self.zero
        nz = np.nonzero(col != 0)[0]
        if len(nz):
            T[nz] -= np.outer(col[nz], T[r])
            b[nz] -= col[nz] * b[r]
        if not self.exact:
            T[np.abs(T) < 1e-13] = 0.0
        self.basis[r] = e
        self.iterations += 1

    def _reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        cb = cost[self.basis]
        return cost - cb @ self.T

    def _run(self, cost: np.ndarray, allowed: np.ndarray) -> Status:
        degenerate = 0
        while True:
            if self.iterations >= self.max_iter:
                raise LpNumericalError(f"iteration limit {self.max_iter} reached")
            d = self._reduced_costs(cost)
            cand = np.nonzero(allowed & (d > self.tol))[0]
            if len(cand) == 0:
                return Status.OPTIMAL
            if degenerate >= self.bland_after:
                e = int(cand[0])
            else:
                # first index attaining the maximum reduced cost
                e = int(cand[np.argmax(d[cand])])
            col = self.T[:, e]
            rows = np.nonzero(col > self.tol)[0]
            if len(rows) == 0:
                return Status.UNBOUNDED
            ratios = self.b[rows] / col[rows]
            best = ratios.min()
            slack = 0 if self.exact else self.tol * (1 + abs(float(best)))
            ties = rows[ratios <= best + slack]
            r = int(min(ties, key=lambda i: self.basis[i]))
            degenerate = degenerate + 1 if self.b[r] == 0 or (
                not self.exact and abs(self.b[r]) <= self.tol) else 0
            self._pivot(r, e)

    def solve(self) -> LpSolution:
        m, ncols = self.m, self.ncols
        zero, one = self.zero, self.one
        dtype = self.T.dtype
        if self.artificial:
            cost1 = np.full(ncols, zero, dtype=dtype)
            for j in self.artificial:
                cost1[j] = -one
            allowed = np.ones(ncols, dtype=bool)
            self._run(cost1, allowed)
            infeas = sum((self.b[i] for i in range(m) if self.basis[i] in self.artificial), zero)
            scale = 1 + max((abs(float(v)) for v in self.rhs_full), default=0.0)
            if infeas > (0 if self.exact else self.tol * scale * 10):
                return LpSolution(Status.INFEASIBLE, iterations=self.iterations)
            self._drive_out_artificials()
        allowed = np.ones(ncols, dtype=bool)
        for j in self.artificial:
            allowed[j] = False
        cost = np.full(ncols, zero, dtype=dtype)
        for j, cj in enumerate(self.c_full):
            cost[j] = cj
        status = self._run(cost, allowed)
        if status is Status.UNBOUNDED:
            return LpSolution(Status.UNBOUNDED, iterations=self.iterations)
        return self._extract(cost)

    def _drive_out_artificials(self):
        for r in range(self.m):
            if self.basis[r] not in self.artificial:
                continue
            row = self.T[r]
            for j in range(self.ncols):
                if j in self.artificial:
                    continue
                if (row[j] != 0) if self.exact else abs(row[j]) > 1e-9:
                    self._pivot(r, j)
                    break

    def _extract(self, cost) -> LpSolution:
        n, m = self.n, self.m
        zero = self.zero
        values = [zero] * self.ncols
        for i, j in enumerate(self.basis):
            values[j] = self.b[i]
        x = values[:n]
        if not self.exact:
            x = [0.0 if abs(v) < 1e-12 else float(v) for v in x]
        cb = cost[self.basis]
        B_inv = self.T[:, self.init_col]
        y_t = cb @ B_inv
        y = [y_t[i] * self.sign[i] for i in range(m)]
        if not self.exact:
            y = [float(v) for v in y]
        n_user = self.p.n_rows
        obj = sum((cj * xj for cj, xj in zip(self.c_full, x)), zero)
        sol = LpSolution(
            status=Status.OPTIMAL,
            x=x,
            duals=y[:n_user],
            bound_duals=y[n_user:],
            objective=obj,
            basic_vars=tuple(sorted(j for j in self.basis if j < n)),
            basic_slacks=tuple(sorted(i for i, c in self.slack_col.items()
                                      if c in self.basis and i < n_user)),
            iterations=self.iterations,
        )
        self._certify(x, y, obj)
        return sol

    def _certify(self, x, y, obj):
        """Re-check the optimality conditions on the original (untransformed) data."""
        exact = self.exact

        def close(a, b, scale=1.0):
            return a == b if exact else abs(a - b) <= 1e-7 * (1 + scale)

        def at_most(a, b, scale=1.0):
            return a <= b if exact else a <= b + 1e-7 * (1 + scale)

        col_dot = [self.zero] * self.n
        dual_obj = self.zero
        for i, row in enumerate(self.rows_full):
            act = sum((_convert(v, exact) * x[j] for j, v in row.items()), self.zero)
            rhs = self.rhs_full[i]
            scale = abs(float(rhs))
            if self.senses_full[i] is Sense.EQ:
                ok = close(act, rhs, scale)
            else:
                ok = at_most(act, rhs, scale)
                if not at_most(-y[i], 0):
                    raise LpNumericalError(f"row {i}: dual {y[i]} has the wrong sign")
                if not close(y[i] * (rhs - act), 0, abs(float(y[i])) * (1 + scale)):
                    raise LpNumericalError(f"row {i}: complementary slackness fails")
            if not ok:
                raise LpNumericalError(f"row {i}: primal infeasible ({act} vs {rhs})")
            for j, v in row.items():
                col_dot[j] += _convert(v, exact) * y[i]
            dual_obj += rhs * y[i]
        for j in range(self.n):
            if not at_most(-x[j], 0):
                raise LpNumericalError(f"variable {j} negative: {x[j]}")
            red = self.c_full[j] - col_dot[j]
            if not at_most(red, 0, abs(float(self.c_full[j]))):
                raise LpNumericalError(f"variable {j}: reduced cost {red} > 0 at optimum")
            if not close(red * x[j], 0, abs(float(x[j])) * (1 + abs(float(self.c_full[j])))):
                raise LpNumericalError(f"variable {j}: complementary slackness fails")
        if not close(obj, dual_obj, abs(float(obj))):
            raise LpNumericalError(f"duality gap: primal {obj} vs dual {dual_obj}")


def to_lp_format(problem: LpProblem) -> str:
    """Render ``problem`` in CPLEX LP text format for cross-checking with other solvers."""

    def term(coef, name):
        c = float(coef)
        sign = "-" if c < 0 else "+"
        return f"{sign} {abs(c):.17g} {name}"

    names = problem.var_names
    objective = " ".join(term(c, names[j]) for j, c in enumerate(problem.objective) if c != 0)
    lines = ["Maximize", f" obj: {objective or '0'}"]
    lines.append("Subject To")
    for i, row in enumerate(problem.rows):
        body = " ".join(term(v, names[j]) for j, v in sorted(row.items())) or f"0 {names[0]}"
        op = "=" if problem.senses[i] is Sense.EQ else "<="
        lines.append(f" {problem.row_names[i]}: {body} {op} {float(problem.rhs[i]):.17g}")
    lines.append("Bounds")
    for j, ub in enumerate(problem.upper):
        if ub is None:
            lines.append(f" {names[j]} >= 0")
        else:
            lines.append(f" 0 <= {names[j]} <= {float(ub):.17g}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def count_interior(x: Sequence, upper: Sequence, tol: float = 1e-9) -> int:
    """Number of variables strictly between their bounds."""
    k = 0
    for xj, ub in zip(x, upper):
        if xj > tol and (ub is None or xj < ub - tol):
            k += 1
    return k
