"""Randomized rounding of a fractional plan into an integral plan.

``round_nc`` samples one column per bus with probability equal to its LP
weight, then serves each OD pair greedily in decreasing per-unit reward,
truncating the last allocation at the demand.  ``round_lc`` thins the
sampling by ``1 - epsilon`` and throws the whole solution away when the
sampled lines break a resource budget.

Randomness comes from a Philox (counter-based) generator seeded per trial;
one uniform draw is consumed per bus, in instance bus order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional

import numpy as np

from .instance import OD, Instance
from .relaxation import Column, FractionalPlan


class AssumptionViolation(ValueError):
    """A weighted line is too expensive for the small-cost rounding scheme."""


def frac(x) -> Fraction:
    """Exact Fraction of a user-supplied parameter; floats go through their shortest repr."""
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class RoundingParams:
    eta: Fraction
    K: int

    def __init__(self, eta, K: int, upper=Fraction(1, 2)):
        eta = frac(eta)
        if not 0 < eta < upper:
            raise ValueError(f"eta must lie in (0, {upper}), got {eta}")
        if K < 1:
            raise ValueError("K must be at least 1")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "K", K)

    @property
    def q(self) -> Fraction:
        return 4 / self.eta

    @property
    def epsilon(self) -> Fraction:
        return 1 / (self.q * self.K)

    @property
    def delta(self) -> Fraction:
        return self.eta**3 / (256 * self.K**3)


@dataclass(frozen=True)
class IntegralPlan:
    assignment: dict            # bus -> line, in instance bus order
    xi: dict                    # (bus, od) -> positive int
    reward: Fraction
    usage: tuple                # true per-resource usage
    discarded: bool = False
    seed: Optional[int] = None
    columns: tuple = field(default=(), compare=False)

    def to_json(self) -> dict:
        return {
            "assignment": dict(self.assignment),
            "xi": [{"bus": b, "origin": od[0], "destination": od[1], "amount": n}
                   for (b, od), n in self.xi.items()],
            "reward": float(self.reward),
            "reward_exact": str(self.reward),
            "usage": [float(u) for u in self.usage],
            "discarded": self.discarded,
            "seed": self.seed,
        }


def empty_plan(instance: Instance, seed=None, discarded=False) -> IntegralPlan:
    return IntegralPlan(
        assignment={b.id: instance.dummy_line(b.id) for b in instance.buses},
        xi={}, reward=Fraction(0), usage=(Fraction(0),) * instance.K,
        discarded=discarded, seed=seed)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _sample(instance: Instance, plan: FractionalPlan, seed: int, scale: float):
    """One column (or None for the dummy line) per bus."""
    draws = _rng(seed).random(instance.M)
    chosen: list[Optional[Column]] = []
    by_bus: dict[str, list] = {}
    for c, w in zip(plan.columns, plan.weights):
        by_bus.setdefault(c.bus, []).append((c, float(w)))
    for bus, u in zip(instance.buses, draws):
        cols = by_bus.get(bus.id, [])
        acc = 0.0
        pick = None
        for c, w in cols:
            acc += scale * w
            if u < acc:
                pick = c
                break
        if pick is None and scale == 1.0 and cols:
            # weights sum to 1 up to round-off
            pick = cols[-1][0]
        chosen.append(pick)
    return chosen


def _assign(instance: Instance, chosen: list[Optional[Column]]):
    """Serve each OD in decreasing reward order, truncating at the demand."""
    order = {b.id: n for n, b in enumerate(instance.buses)}
    xi: dict[tuple[str, OD], int] = {}
    reward = Fraction(0)
    for i, od in enumerate(instance.od_pairs):
        takers = [c for c in chosen if c is not None and c.theta[i] > 0]
        takers.sort(key=lambda c: (-instance.reward(c.bus, c.line, od.key), order[c.bus]))
        left = od.demand
        for c in takers:
            if left == 0:
                break
            amount = min(c.theta[i], left)
            left -= amount
            xi[(c.bus, od.key)] = amount
            reward += instance.reward(c.bus, c.line, od.key) * amount
    return xi, reward


def _finish(instance: Instance, chosen, seed) -> IntegralPlan:
    xi, reward = _assign(instance, chosen)
    assignment = {}
    for bus, c in zip(instance.buses, chosen):
        assignment[bus.id] = c.line if c is not None else instance.dummy_line(bus.id)
    usage = tuple(sum((instance.cost(b, l, k) for b, l in assignment.items()), Fraction(0))
                  for k in range(instance.K))
    return IntegralPlan(assignment, xi, reward, usage, False, seed, tuple(chosen))


def round_nc(plan: FractionalPlan, instance: Instance, seed: int) -> IntegralPlan:
    chosen = _sample(instance, plan, seed, 1.0)
    return _finish(instance, chosen, seed)


def round_lc(plan: FractionalPlan, instance: Instance, params: RoundingParams, seed: int,
             cost_overlay: Optional[Mapping[tuple[str, str], tuple]] = None) -> IntegralPlan:
    """Thinned sampling with a discard step on budget violation.

    ``cost_overlay`` replaces the instance costs both in the small-cost
    precondition and in the discard test.
    """
    cost_of: Callable = (lambda b, l: cost_overlay[(b, l)]) if cost_overlay is not None \
        else instance.cost_vector
    check_small_costs(plan, cost_of, params)
    scale = float(1 - params.epsilon)
    chosen = _sample(instance, plan, seed, scale)
    result = _finish(instance, chosen, seed)
    for k in range(instance.K):
        used = sum((cost_of(b, l)[k] for b, l in result.assignment.items()), Fraction(0))
        if used > 1:
            return empty_plan(instance, seed, discarded=True)
    return result


def check_small_costs(plan: FractionalPlan, cost_of: Callable, params: RoundingParams):
    for c, w in zip(plan.columns, plan.weights):
        if w > 0 and max(cost_of(c.bus, c.line), default=Fraction(0)) > params.delta:
            raise AssumptionViolation(
                f"line {c.line!r} of bus {c.bus!r} has cost above {params.delta}")


# ---------------------------------------------------------------------------
# feasibility audit


@dataclass
class FeasibilityReport:
    violations: list = field(default_factory=list)
    reward: Fraction = Fraction(0)
    usage: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def _nodes_of(instance: Instance, line_id: str) -> list[str]:
    arcs = {a.id: a for a in instance.network.arcs}
    seq = [arcs[a] for a in instance.line_by_id[line_id].arc_sequence]
    return [seq[0].tail] + [a.head for a in seq] if seq else []


def check_feasibility(plan: IntegralPlan, instance: Instance, budget=1) -> FeasibilityReport:
    """Re-derive every ILP constraint from the raw instance data.

    ``budget`` is the per-resource allowance (``None`` disables the check).
    The subpath logic is recomputed here rather than taken from the
    instance index so the audit does not share code with the planner.
    """
    rep = FeasibilityReport()
    bad = rep.violations.append
    buses = {b.id: b for b in instance.buses}
    if set(plan.assignment) != set(buses):
        bad("assignment must name every bus exactly once")
    for b, l in plan.assignment.items():
        if b in buses and l not in buses[b].candidate_lines:
            bad(f"bus {b!r} assigned to non-candidate line {l!r}")

    served = {od.key: 0 for od in instance.od_pairs}
    load: dict[tuple[str, int], int] = {}
    reward = Fraction(0)
    for (b, od), n in plan.xi.items():
        if not isinstance(n, int) or n < 0:
            bad(f"xi[{b}, {od}] = {n!r} is not a nonnegative integer")
            continue
        if od not in served:
            bad(f"xi references unknown OD {od}")
            continue
        if n == 0:
            continue
        line = plan.assignment.get(b)
        if line is None:
            continue
        nodes = _nodes_of(instance, line)
        start = nodes.index(od[0]) if od[0] in nodes else None
        stop = None
        if start is not None:
            stop = next((j for j in range(start + 1, len(nodes)) if nodes[j] == od[1]), None)
        if stop is None:
            bad(f"bus {b!r} on line {line!r} cannot serve OD {od}")
            continue
        served[od] += n
        for a in range(start, stop):
            load[(b, a)] = load.get((b, a), 0) + n
        reward += instance.rewards.get((b, line, od), Fraction(0)) * n
    for od in instance.od_pairs:
        if served[od.key] > od.demand:
            bad(f"OD {od.key} over-served: {served[od.key]} > {od.demand}")
    for (b, a), n in load.items():
        if n > buses[b].capacity:
            bad(f"bus {b!r} exceeds capacity on arc position {a}: {n} > {buses[b].capacity}")
    usage = tuple(
        sum((instance.costs.get((b, l, k), Fraction(0)) for b, l in plan.assignment.items()),
            Fraction(0))
        for k in range(instance.K))
    if budget is not None:
        for k, u in enumerate(usage):
            if u > budget:
                bad(f"resource {k} usage {u} exceeds budget {budget}")
    if reward != plan.reward:
        bad(f"reported reward {plan.reward} differs from recomputed {reward}")
    if tuple(usage) != tuple(plan.usage):
        bad(f"reported usage {plan.usage} differs from recomputed {usage}")
    rep.reward, rep.usage = reward, usage
    return rep
