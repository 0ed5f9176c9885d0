"""Enumeration of high-cost assignments and the two composite algorithms.

A line is *high-cost* for a bus when some resource cost exceeds ``delta``.
Since at most ``K / delta`` such lines fit into the budgets, all
resource-feasible partial assignments of high-cost lines can be listed at
desk scale.  Algorithm C compares the low-cost relaxation with the best
fixed high-cost assignment and rounds the better one; Algorithm C-Tol
rescales low-cost line costs into the residual budget plus ``tau`` and
rounds the best rescaled relaxation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from .instance import Instance
from .relaxation import (
    Fixed, FractionalPlan, LowCost, Modified, is_low_cost, solve_relaxation,
)
from .rounding import IntegralPlan, RoundingParams, check_feasibility, frac, round_lc, round_nc

DEFAULT_ENUM_CAP = 10**6


class EnumerationCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class HighCostAssignment:
    """Partial map bus -> high-cost line, with its per-resource consumption."""

    omega: tuple[tuple[str, str], ...]
    consumption: tuple[Fraction, ...]

    def as_dict(self) -> dict[str, str]:
        return dict(self.omega)

    def __len__(self):
        return len(self.omega)


def high_cost_lines(instance: Instance, bus: str, delta: Fraction) -> list[str]:
    """Candidate lines of ``bus`` with some cost above ``delta``, in instance line order."""
    order = {l.id: n for n, l in enumerate(instance.lines)}
    lines = [l for l in instance.bus_by_id[bus].candidate_lines
             if not is_low_cost(instance, bus, l, delta)]
    return sorted(lines, key=order.__getitem__)


def enumerate_a_delta(instance: Instance, delta, cap: Optional[int] = DEFAULT_ENUM_CAP
                      ) -> Iterator[HighCostAssignment]:
    """Depth-first over buses in instance order; 'unassigned' before each high-cost line.

    The empty assignment comes first.  Branches that break a budget are cut.
    """
    delta = frac(delta)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    buses = [b.id for b in instance.buses]
    options = [high_cost_lines(instance, b, delta) for b in buses]
    K = instance.K
    count = 0
    stack: list[tuple[str, str]] = []

    def rec(n: int, used: tuple):
        nonlocal count
        if n == len(buses):
            count += 1
            if cap is not None and count > cap:
                raise EnumerationCapExceeded(
                    f"more than {cap} high-cost assignments at delta={delta}")
            yield HighCostAssignment(tuple(stack), used)
            return
        yield from rec(n + 1, used)
        for line in options[n]:
            new = tuple(used[k] + instance.cost(buses[n], line, k) for k in range(K))
            if any(u > 1 for u in new):
                continue
            stack.append((buses[n], line))
            yield from rec(n + 1, new)
            stack.pop()

    yield from rec(0, (Fraction(0),) * K)


def a_delta_bound(instance: Instance, delta) -> float:
    """log of (K/delta) * (M*L)^(K/delta), the cardinality bound on A_delta."""
    delta = frac(delta)
    L = max((len(b.candidate_lines) for b in instance.buses), default=1)
    ratio = instance.K / delta
    return math.log(ratio) + float(ratio) * math.log(max(instance.M * L, 1))


# ---------------------------------------------------------------------------
# Algorithm C


@dataclass
class CompositeResult:
    """Prepared LP side of a composite algorithm; rounding happens per trial."""

    algorithm: str
    branch: str
    params: RoundingParams
    delta: Fraction
    plan: FractionalPlan
    omega_star: dict
    f_star: object
    gamma_delta: object = None
    tau: Optional[Fraction] = None
    n_assignments: int = 0
    cost_overlay: Optional[dict] = field(default=None, repr=False)

    @property
    def budget(self):
        return 1 if self.tau is None else 1 + self.tau

    def round(self, instance: Instance, seed: int) -> IntegralPlan:
        if self.branch == "FIXED":
            return round_nc(self.plan, instance, seed)
        return round_lc(self.plan, instance, self.params, seed, cost_overlay=self.cost_overlay)

    def to_json(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "branch": self.branch,
            "eta": str(self.params.eta),
            "tau": None if self.tau is None else str(self.tau),
            "delta": str(self.delta),
            "omega_star": dict(self.omega_star),
            "f_star": float(self.f_star),
            "gamma_delta": None if self.gamma_delta is None else float(self.gamma_delta),
            "n_assignments": self.n_assignments,
        }


def prepare_c(instance: Instance, eta, exact: bool = False,
              cap: Optional[int] = DEFAULT_ENUM_CAP) -> CompositeResult:
    params = RoundingParams(eta, instance.K, upper=Fraction(1, 4))
    delta = params.delta
    low = solve_relaxation(instance, LowCost(delta), exact=exact)
    best_plan, best_omega, n = None, None, 0
    for omega in enumerate_a_delta(instance, delta, cap):
        n += 1
        plan = solve_relaxation(instance, Fixed(omega.as_dict()), exact=exact)
        if best_plan is None or plan.gamma > best_plan.gamma:
            best_plan, best_omega = plan, omega
    if low.gamma >= best_plan.gamma:
        branch, plan = "LOW_COST", low
    else:
        branch, plan = "FIXED", best_plan
    return CompositeResult("C", branch, params, delta, plan, best_omega.as_dict(),
                           best_plan.gamma, gamma_delta=low.gamma, n_assignments=n)


def algorithm_c(instance: Instance, eta, seed: int, exact: bool = False,
                cap: Optional[int] = DEFAULT_ENUM_CAP) -> IntegralPlan:
    prepared = prepare_c(instance, eta, exact=exact, cap=cap)
    result = prepared.round(instance, seed)
    _audit(result, instance, 1)
    return result


# ---------------------------------------------------------------------------
# Algorithm C-Tol


def prepare_c_tol(instance: Instance, eta, tau, exact: bool = False,
                  cap: Optional[int] = DEFAULT_ENUM_CAP) -> CompositeResult:
    params = RoundingParams(eta, instance.K)
    tau = frac(tau)
    if not 0 < tau < Fraction(1, 2):
        raise ValueError(f"tau must lie in (0, 1/2), got {tau}")
    delta = tau * params.delta
    best_plan, best_omega, n = None, None, 0
    for omega in enumerate_a_delta(instance, delta, cap):
        n += 1
        plan = solve_relaxation(instance, Modified(delta, tau, omega.as_dict()), exact=exact)
        if best_plan is None or plan.gamma > best_plan.gamma:
            best_plan, best_omega = plan, omega
    return CompositeResult("C-Tol", "MODIFIED", params, delta, best_plan, best_omega.as_dict(),
                           best_plan.gamma, tau=tau, n_assignments=n,
                           cost_overlay=best_plan.cost_overlay)


def algorithm_c_tol(instance: Instance, eta, tau, seed: int, exact: bool = False,
                    cap: Optional[int] = DEFAULT_ENUM_CAP) -> IntegralPlan:
    prepared = prepare_c_tol(instance, eta, tau, exact=exact, cap=cap)
    result = prepared.round(instance, seed)
    _audit(result, instance, prepared.budget)
    return result


def _audit(plan: IntegralPlan, instance: Instance, budget):
    report = check_feasibility(plan, instance, budget)
    if not report.ok:
        raise AssertionError(f"composite algorithm produced an infeasible plan: {report.violations}")
