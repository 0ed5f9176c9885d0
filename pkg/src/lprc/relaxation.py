"""Column-generation LP relaxation over integer points of P(b, l).

The master LP has one weight per generated column (a bus, a line and an
integer allocation vector ``theta``), an assignment row per bus, a budget
row per resource and a demand row per OD pair.  Pricing for a (bus, line)
pair maximizes ``sum (v - w) * theta`` over P(b, l); its constraint matrix
has consecutive ones in every column, so the basic optimum returned by
:func:`lprc.lpcore.solve_lp` is integral, which is asserted on every call.

Restricted variants (fixed high-cost assignment, low-cost lines only, and
the rescaled-cost variant used with a resource tolerance) share the same
loop and differ only in which lines each bus may use and which costs enter
the budget rows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Union

from .instance import OD, Instance
from .lpcore import LpProblem, Sense, Status, solve_lp

log = logging.getLogger(__name__)

PRICING_INTEGRALITY_TOL = 1e-7
ENTER_TOL = 1e-7


class RestrictionError(ValueError):
    """The requested restriction is inconsistent with the instance."""


class PricingIntegralityError(RuntimeError):
    """Pricing returned a fractional vertex, which points at an LP solver bug."""


# ---------------------------------------------------------------------------
# restrictions


def _omega_items(omega: Mapping[str, str]) -> tuple[tuple[str, str], ...]:
    return tuple(sorted(dict(omega).items()))


@dataclass(frozen=True)
class Full:
    def to_json(self):
        return {"kind": "FULL"}


@dataclass(frozen=True)
class Fixed:
    """Buses in ``omega`` use exactly their assigned line, all others the dummy line."""

    omega: tuple[tuple[str, str], ...]

    def __init__(self, omega: Mapping[str, str]):
        object.__setattr__(self, "omega", _omega_items(omega))

    def to_json(self):
        return {"kind": "FIXED", "omega": dict(self.omega)}


@dataclass(frozen=True)
class LowCost:
    delta: Fraction

    def __init__(self, delta):
        object.__setattr__(self, "delta", Fraction(delta))

    def to_json(self):
        return {"kind": "LOW_COST", "delta": str(self.delta)}


@dataclass(frozen=True)
class Modified:
    delta: Fraction
    tau: Fraction
    omega: tuple[tuple[str, str], ...]

    def __init__(self, delta, tau, omega: Mapping[str, str]):
        object.__setattr__(self, "delta", Fraction(delta))
        object.__setattr__(self, "tau", Fraction(tau))
        object.__setattr__(self, "omega", _omega_items(omega))

    def to_json(self):
        return {"kind": "MODIFIED", "delta": str(self.delta), "tau": str(self.tau),
                "omega": dict(self.omega)}


Restriction = Union[Full, Fixed, LowCost, Modified]


def is_low_cost(instance: Instance, bus: str, line: str, delta: Fraction) -> bool:
    return all(c <= delta for c in instance.cost_vector(bus, line))


def allowed_lines(instance: Instance, restriction: Restriction, bus: str) -> list[str]:
    cands = list(instance.bus_by_id[bus].candidate_lines)
    if isinstance(restriction, Full):
        return cands
    if isinstance(restriction, Fixed):
        omega = dict(restriction.omega)
        return [omega[bus]] if bus in omega else [instance.dummy_line(bus)]
    if isinstance(restriction, LowCost):
        return [l for l in cands if is_low_cost(instance, bus, l, restriction.delta)]
    if isinstance(restriction, Modified):
        omega = dict(restriction.omega)
        if bus in omega:
            return [omega[bus]]
        return [l for l in cands if is_low_cost(instance, bus, l, restriction.delta)]
    raise TypeError(f"unknown restriction {restriction!r}")


def omega_usage(instance: Instance, omega: Mapping[str, str]) -> tuple[Fraction, ...]:
    return tuple(sum((instance.cost(b, l, k) for b, l in dict(omega).items()), Fraction(0))
                 for k in range(instance.K))


def restrict_modified_costs(instance: Instance, omega: Mapping[str, str], delta, tau
                            ) -> dict[tuple[str, str], tuple[Fraction, ...]]:
    """Cost overlay: zero on high-cost lines, residual-budget scaling on low-cost lines."""
    delta, tau = Fraction(delta), Fraction(tau)
    used = omega_usage(instance, omega)
    overlay = {}
    for bus in instance.buses:
        for line in bus.candidate_lines:
            if not is_low_cost(instance, bus.id, line, delta):
                overlay[(bus.id, line)] = (Fraction(0),) * instance.K
            else:
                overlay[(bus.id, line)] = tuple(
                    instance.cost(bus.id, line, k) / (1 - used[k] + tau) for k in range(instance.K))
    return overlay


def effective_costs(instance: Instance, restriction: Restriction):
    """Cost lookup ``(bus, line) -> tuple`` used in the budget rows."""
    if isinstance(restriction, Modified):
        overlay = restrict_modified_costs(instance, dict(restriction.omega),
                                          restriction.delta, restriction.tau)
        return lambda b, l: overlay[(b, l)]
    return instance.cost_vector


def check_restriction(instance: Instance, restriction: Restriction):
    if isinstance(restriction, (Fixed, Modified)):
        for b, l in restriction.omega:
            if b not in instance.bus_by_id:
                raise RestrictionError(f"omega assigns unknown bus {b!r}")
            if l not in instance.bus_by_id[b].candidate_lines:
                raise RestrictionError(f"omega assigns line {l!r} not among bus {b!r}'s candidates")
        used = omega_usage(instance, dict(restriction.omega))
        if any(u > 1 for u in used):
            raise RestrictionError(f"omega exceeds the resource budget: usage {used}")
    if isinstance(restriction, Modified):
        for b, l in restriction.omega:
            if is_low_cost(instance, b, l, restriction.delta):
                raise RestrictionError(f"omega assigns low-cost line {l!r} to bus {b!r}")
        if restriction.tau <= 0:
            raise RestrictionError("tau must be positive")


# ---------------------------------------------------------------------------
# columns and pricing


@dataclass(frozen=True)
class Column:
    bus: str
    line: str
    theta: tuple[int, ...]
    reward: Fraction
    costs: tuple[Fraction, ...]

    @property
    def key(self):
        return (self.bus, self.line, self.theta)


def make_column(instance: Instance, bus: str, line: str, theta, costs) -> Column:
    reward = sum((instance.reward(bus, line, od.key) * t
                  for od, t in zip(instance.od_pairs, theta) if t), Fraction(0))
    return Column(bus, line, tuple(int(t) for t in theta), reward, tuple(costs))


def solve_pricing(instance: Instance, bus: str, line: str, w, exact: bool = False):
    """Best integer point of P(bus, line) for per-unit profits ``v - w``.

    ``w`` is indexed like ``instance.od_pairs``.  Returns ``(theta, value)``
    with ``theta`` a tuple of ints over all OD pairs.
    """
    if line not in instance.bus_by_id[bus].candidate_lines:
        raise RestrictionError(f"line {line!r} is not a candidate of bus {bus!r}")
    n_od = len(instance.od_pairs)
    theta = [0] * n_od
    zero = Fraction(0) if exact else 0.0
    if instance.line_by_id[line].is_dummy:
        return tuple(theta), zero
    cap = instance.bus_by_id[bus].capacity
    index = instance.subpaths
    prob = LpProblem()
    var_od = []
    arc_rows: dict[int, dict[int, int]] = {}
    for i, od in enumerate(instance.od_pairs):
        rng = index.get(od.key, line)
        if rng is None:
            continue
        v = instance.reward(bus, line, od.key)
        profit = (v - Fraction(w[i])) if exact else (float(v) - float(w[i]))
        if profit <= 0:
            continue
        j = prob.add_var(profit, upper=od.demand, name=f"t{i}")
        var_od.append(i)
        for a in range(*rng):
            arc_rows.setdefault(a, {})[j] = 1
    if not var_od:
        return tuple(theta), zero
    for a in sorted(arc_rows):
        prob.add_row(arc_rows[a], Sense.LE, cap, name=f"arc{a}")
    sol = solve_lp(prob, exact=exact)
    if sol.status is not Status.OPTIMAL:
        raise PricingIntegralityError(f"pricing LP for ({bus}, {line}) returned {sol.status}")
    value = zero
    for j, i in enumerate(var_od):
        xj = sol.x[j]
        r = round(xj)
        if exact:
            if xj != r:
                raise PricingIntegralityError(f"fractional pricing vertex {xj} for ({bus}, {line})")
        elif abs(xj - r) > PRICING_INTEGRALITY_TOL:
            raise PricingIntegralityError(f"fractional pricing vertex {xj} for ({bus}, {line})")
        theta[i] = int(r)
        value += prob.objective[j] * r
    return tuple(theta), value


def od_key_str(od: OD) -> str:
    return f"{od[0]}->{od[1]}"


# ---------------------------------------------------------------------------
# master problem


@dataclass(frozen=True)
class DualPrices:
    q: dict
    w: tuple
    u: tuple

    def to_json(self):
        return {"q": {b: float(v) for b, v in self.q.items()},
                "w": [float(v) for v in self.w],
                "u": [float(v) for v in self.u]}


@dataclass(frozen=True)
class FractionalPlan:
    restriction: Restriction
    columns: tuple[Column, ...]
    weights: tuple
    gamma: object
    duals: DualPrices
    max_reduced_cost: object
    iterations: int
    exact: bool
    od_keys: tuple[OD, ...] = ()
    cost_overlay: Optional[dict] = field(default=None, compare=False)

    def bus_columns(self, bus: str) -> list[tuple[Column, object]]:
        return [(c, w) for c, w in zip(self.columns, self.weights) if c.bus == bus]

    def to_json(self) -> dict:
        return {
            "restriction": self.restriction.to_json(),
            "gamma": float(self.gamma),
            "gamma_exact": str(self.gamma) if self.exact else None,
            "lp_mode": "exact" if self.exact else "float",
            "iterations": self.iterations,
            "max_reduced_cost": float(self.max_reduced_cost),
            "columns": [
                {"bus": c.bus, "line": c.line,
                 "theta": {od_key_str(od): t for od, t in zip(self.od_keys, c.theta) if t},
                 "weight": float(w)}
                for c, w in zip(self.columns, self.weights)
            ],
            "duals": self.duals.to_json(),
        }


def _base_line(instance: Instance, restriction: Restriction, bus: str) -> str:
    allowed = allowed_lines(instance, restriction, bus)
    if isinstance(restriction, (Fixed, Modified)):
        return allowed[0]
    dummy = instance.dummy_line(bus)
    if dummy not in allowed:
        raise RestrictionError(f"restriction removes the dummy line of bus {bus!r}")
    return dummy


def _build_master(instance: Instance, columns: list[Column], exact: bool) -> LpProblem:
    conv = (lambda x: x) if exact else float
    prob = LpProblem()
    for c in columns:
        prob.add_var(conv(c.reward), name=f"lam_{c.bus}_{c.line}")
    bus_rows = {b.id: {} for b in instance.buses}
    res_rows = [{} for _ in range(instance.K)]
    od_rows = [{} for _ in instance.od_pairs]
    for j, c in enumerate(columns):
        bus_rows[c.bus][j] = 1
        for k, ck in enumerate(c.costs):
            if ck:
                res_rows[k][j] = conv(ck)
        for i, t in enumerate(c.theta):
            if t:
                od_rows[i][j] = t
    for b in instance.buses:
        prob.add_row(bus_rows[b.id], Sense.EQ, 1, name=f"bus_{b.id}")
    for k in range(instance.K):
        prob.add_row(res_rows[k], Sense.LE, 1, name=f"res_{k}")
    for i, od in enumerate(instance.od_pairs):
        prob.add_row(od_rows[i], Sense.LE, od.demand, name=f"od_{i}")
    return prob


def solve_relaxation(instance: Instance, restriction: Optional[Restriction] = None,
                     exact: bool = False, enter_tol: float = ENTER_TOL,
                     max_rounds: int = 10_000) -> FractionalPlan:
    """Optimal solution of the (restricted) relaxation by column generation."""
    restriction = restriction or Full()
    check_restriction(instance, restriction)
    cost_of = effective_costs(instance, restriction)
    tol = 0 if exact else enter_tol
    zero = Fraction(0) if exact else 0.0

    columns: list[Column] = []
    seen = set()
    for bus in instance.buses:
        line = _base_line(instance, restriction, bus.id)
        col = make_column(instance, bus.id, line, (0,) * len(instance.od_pairs), cost_of(bus.id, line))
        columns.append(col)
        seen.add(col.key)
    allowed = {b.id: allowed_lines(instance, restriction, b.id) for b in instance.buses}

    M, K = instance.M, instance.K
    rounds = 0
    while True:
        rounds += 1
        if rounds > max_rounds:
            raise RuntimeError("column generation did not converge")
        master = _build_master(instance, columns, exact)
        sol = solve_lp(master, exact=exact)
        if sol.status is Status.INFEASIBLE:
            raise RestrictionError(f"restricted master infeasible under {restriction}")
        if sol.status is not Status.OPTIMAL:
            raise RuntimeError(f"master LP returned {sol.status}")
        y = sol.duals
        q = {b.id: y[i] for i, b in enumerate(instance.buses)}
        u = [y[M + k] for k in range(K)]
        w = [y[M + K + i] for i in range(len(instance.od_pairs))]
        if not exact:
            u = [max(0.0, v) for v in u]
            w = [max(0.0, v) for v in w]
        best_rc = None
        new = []
        for bus in instance.buses:
            for line in allowed[bus.id]:
                theta, value = solve_pricing(instance, bus.id, line, w, exact=exact)
                costs = cost_of(bus.id, line)
                charge = sum((Fraction(c) * uk if exact else float(c) * uk
                              for c, uk in zip(costs, u)), zero)
                rc = value - q[bus.id] - charge
                if best_rc is None or rc > best_rc:
                    best_rc = rc
                if rc > tol:
                    col = make_column(instance, bus.id, line, theta, costs)
                    if col.key not in seen:
                        seen.add(col.key)
                        new.append(col)
        log.debug("round %d: gamma=%s, %d new columns, best rc=%s",
                  rounds, sol.objective, len(new), best_rc)
        if not new:
            break
        columns.extend(new)

    drop = 0 if exact else 1e-12
    kept = [(c, x) for c, x in zip(columns, sol.x) if x > drop]
    plan = FractionalPlan(
        restriction=restriction,
        columns=tuple(c for c, _ in kept),
        weights=tuple(x for _, x in kept),
        gamma=sol.objective,
        duals=DualPrices(q=q, w=tuple(w), u=tuple(u)),
        max_reduced_cost=best_rc if best_rc is not None else zero,
        iterations=rounds,
        exact=exact,
        od_keys=tuple(od.key for od in instance.od_pairs),
        cost_overlay=(restrict_modified_costs(instance, dict(restriction.omega),
                                              restriction.delta, restriction.tau)
                      if isinstance(restriction, Modified) else None),
    )
    return plan
