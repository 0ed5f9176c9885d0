"""Exact optimum of the integer program on micro instances.

Line assignments are enumerated exhaustively; for each resource-feasible
one, the integer allocation of demand to buses is maximized by depth-first
search over (OD, bus) pairs with a simple optimistic bound.  Intended as
ground truth for approximation-ratio tests, not as a production solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .instance import Instance
from .rounding import IntegralPlan


class OracleLimitExceeded(RuntimeError):
    def __init__(self, message: str, stats: "SearchStats"):
        super().__init__(message)
        self.stats = stats


@dataclass
class Limits:
    max_assignments: Optional[int] = 10**5
    max_nodes: Optional[int] = 10**7


@dataclass
class SearchStats:
    assignments: int = 0
    feasible_assignments: int = 0
    nodes: int = 0

    def to_json(self):
        return {"assignments": self.assignments,
                "feasible_assignments": self.feasible_assignments, "nodes": self.nodes}


@dataclass
class OracleResult:
    opt_value: Fraction
    plan: IntegralPlan
    stats: SearchStats = field(default_factory=SearchStats)

    def to_json(self):
        return {"opt_value": float(self.opt_value), "opt_value_exact": str(self.opt_value),
                "plan": self.plan.to_json(), "stats": self.stats.to_json()}


def _pairs(instance: Instance, assignment: Mapping[str, str]):
    """Per OD: list of (bus, reward, arc range) with positive reward, best first."""
    index = instance.subpaths
    order = {b.id: n for n, b in enumerate(instance.buses)}
    out = []
    for i, od in enumerate(instance.od_pairs):
        takers = []
        for b, l in assignment.items():
            rng = index.get(od.key, l)
            v = instance.reward(b, l, od.key)
            if rng is not None and v > 0:
                takers.append((b, v, rng))
        takers.sort(key=lambda t: (-t[1], order[t[0]]))
        if takers:
            out.append((i, od, takers))
    # ODs with the largest per-unit reward first
    out.sort(key=lambda item: (-item[2][0][1], item[0]))
    return out


def allocation_upper_bound(instance: Instance, assignment: Mapping[str, str]) -> Fraction:
    return sum((od.demand * takers[0][1] for _, od, takers in _pairs(instance, assignment)),
               Fraction(0))


def solve_allocation_exact(instance: Instance, assignment: Mapping[str, str],
                           max_nodes: Optional[int] = 10**7, prune: bool = True,
                           stats: Optional[SearchStats] = None, incumbent=None):
    """Maximum reward of integer allocations for a fixed bus-to-line assignment.

    Returns ``(value, xi)`` with ``xi`` mapping ``(bus, od)`` to positive
    amounts.  When ``incumbent`` is given and ``prune`` is on, branches that
    cannot beat it are cut and ``(None, None)`` is returned if nothing does.
    """
    stats = stats if stats is not None else SearchStats()
    caps = {b.id: b.capacity for b in instance.buses}
    items = []
    for _, od, takers in _pairs(instance, assignment):
        for pos, (b, v, rng) in enumerate(takers):
            best_rest = takers[pos][1]
            items.append((od, b, v, rng, pos == 0, best_rest))
    # optimistic value of everything from item n on, given the demand left on item n's OD
    n_items = len(items)
    later_od_bound = [Fraction(0)] * (n_items + 1)
    for n in range(n_items - 1, -1, -1):
        later_od_bound[n] = later_od_bound[n + 1]
        if n + 1 < n_items and items[n + 1][4]:
            nxt = items[n + 1]
            later_od_bound[n] = later_od_bound[n + 1] + nxt[0].demand * nxt[2]
    # later_od_bound[n]: bound for ODs strictly after item n's OD

    load: dict[tuple[str, int], int] = {}
    left = {od.key: od.demand for od in instance.od_pairs}
    chosen: dict = {}
    best_val = incumbent
    best_xi = None
    start_nodes = stats.nodes

    def dfs(n: int, value: Fraction):
        nonlocal best_val, best_xi
        stats.nodes += 1
        if max_nodes is not None and stats.nodes - start_nodes > max_nodes:
            raise OracleLimitExceeded(f"allocation search exceeded {max_nodes} nodes", stats)
        if n == n_items:
            if best_val is None or value > best_val:
                best_val = value
                best_xi = {k: a for k, a in chosen.items() if a > 0}
            return
        od, b, v, rng, _, best_rest = items[n]
        if prune and best_val is not None:
            bound = value + left[od.key] * best_rest + later_od_bound[n]
            if bound <= best_val:
                return
        room = min((caps[b] - load.get((b, a), 0) for a in range(*rng)), default=0)
        top = min(room, left[od.key])
        for amount in range(top, -1, -1):
            if amount:
                for a in range(*rng):
                    load[(b, a)] = load.get((b, a), 0) + amount
                left[od.key] -= amount
                chosen[(b, od.key)] = amount
            dfs(n + 1, value + v * amount)
            if amount:
                for a in range(*rng):
                    load[(b, a)] -= amount
                left[od.key] += amount
                del chosen[(b, od.key)]

    dfs(0, Fraction(0))
    if best_xi is None:
        if incumbent is not None and prune:
            return None, None
        return Fraction(0), {}
    return best_val, best_xi


def solve_exact(instance: Instance, limits: Optional[Limits] = None, prune: bool = True
                ) -> OracleResult:
    """Global optimum over all resource-feasible line assignments."""
    limits = limits or Limits()
    stats = SearchStats()
    buses = [b.id for b in instance.buses]
    choices = [instance.bus_by_id[b].candidate_lines for b in buses]
    total = 1
    for c in choices:
        total *= len(c)
    if limits.max_assignments is not None and total > limits.max_assignments:
        raise OracleLimitExceeded(
            f"{total} line assignments exceed the limit {limits.max_assignments}", stats)

    best_val: Optional[Fraction] = None
    best = None
    for combo in itertools.product(*choices):
        stats.assignments += 1
        assignment = dict(zip(buses, combo))
        usage = [sum((instance.cost(b, l, k) for b, l in assignment.items()), Fraction(0))
                 for k in range(instance.K)]
        if any(u > 1 for u in usage):
            continue
        stats.feasible_assignments += 1
        if prune and best_val is not None and allocation_upper_bound(instance, assignment) <= best_val:
            continue
        value, xi = solve_allocation_exact(
            instance, assignment, max_nodes=limits.max_nodes, prune=prune, stats=stats,
            incumbent=best_val if prune else None)
        if value is not None and (best_val is None or value > best_val):
            best_val = value
            best = (assignment, xi, tuple(usage))
    if best is None:
        raise ValueError("instance has no resource-feasible assignment")
    assignment, xi, usage = best
    plan = IntegralPlan(assignment=assignment, xi=xi, reward=best_val, usage=usage)
    return OracleResult(best_val, plan, stats)
