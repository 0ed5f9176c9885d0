import math
from collections import Counter
from fractions import Fraction

import pytest

from lprc.relaxation import DualPrices, FractionalPlan, Full, make_column, solve_relaxation
from lprc.rounding import (
    AssumptionViolation, IntegralPlan, RoundingParams, check_feasibility, empty_plan, round_lc,
    round_nc,
)

from builders import micro_instance, path_instance


def manual_plan(instance, entries):
    """FractionalPlan from ``(bus, line, theta, weight)`` entries."""
    cols, weights = [], []
    for bus, line, theta, w in entries:
        cols.append(make_column(instance, bus, line, theta, instance.cost_vector(bus, line)))
        weights.append(w)
    gamma = sum(c.reward * Fraction(w) for c, w in zip(cols, weights))
    return FractionalPlan(Full(), tuple(cols), tuple(weights), gamma,
                          DualPrices({}, (), ()), 0, 0, False,
                          tuple(od.key for od in instance.od_pairs))


def test_params_substitution():
    p = RoundingParams(0.4, 2)
    assert p.q == 10
    assert p.epsilon == Fraction(1, 20)
    assert p.delta == Fraction(2, 5) ** 3 / (256 * 8)
    assert float(p.delta) == pytest.approx(3.125e-5)


@pytest.mark.parametrize("eta", [0, 0.5, -0.1, 0.7])
def test_params_range(eta):
    with pytest.raises(ValueError):
        RoundingParams(eta, 1)


def test_deterministic_single_column():
    inst = path_instance(2, [(0, 2, 2)], capacity=3, rewards=[1])
    plan = manual_plan(inst, [("b0", "L", (2,), 1)])
    out = round_nc(plan, inst, seed=3)
    assert out.xi == {("b0", ("v0", "v2")): 2}
    assert out.reward == 2 and out.assignment == {"b0": "L"}


def test_truncation_follows_reward_order():
    inst = path_instance(2, [(0, 2, 4)], n_buses=2, capacity=3,
                         rewards={(0, 0): 1, (1, 0): 5})
    plan = manual_plan(inst, [("b0", "L", (3,), 1), ("b1", "L", (3,), 1)])
    out = round_nc(plan, inst, seed=0)
    # the higher-reward bus b1 is served first even though b0 comes first in bus order
    assert out.xi == {("b1", ("v0", "v2")): 3, ("b0", ("v0", "v2")): 1}
    assert out.reward == 16


def test_equal_rewards_break_ties_by_bus_order():
    inst = path_instance(2, [(0, 2, 4)], n_buses=2, capacity=3, rewards=[2])
    plan = manual_plan(inst, [("b0", "L", (3,), 1), ("b1", "L", (3,), 1)])
    out = round_nc(plan, inst, seed=0)
    assert out.xi == {("b0", ("v0", "v2")): 3, ("b1", ("v0", "v2")): 1}


def test_nc_audit_over_many_seeds():
    inst = micro_instance(4, n_buses=4, n_od=5)
    plan = solve_relaxation(inst)
    for seed in range(500):
        out = round_nc(plan, inst, seed)
        assert check_feasibility(out, inst, budget=None).ok
        # greedy order: a bus with strictly larger reward never loses to a lower one
        for od in inst.od_pairs:
            got = [(inst.reward(b, out.assignment[b], od.key), n)
                   for (b, key), n in out.xi.items() if key == od.key]
            takers = [c for c in out.columns if c is not None and
                      c.theta[inst.od_index[od.key]] > 0]
            full = [inst.reward(c.bus, c.line, od.key) for c in takers
                    if out.xi.get((c.bus, od.key), 0) == c.theta[inst.od_index[od.key]]]
            short = [inst.reward(c.bus, c.line, od.key) for c in takers
                     if out.xi.get((c.bus, od.key), 0) < c.theta[inst.od_index[od.key]]]
            if short and full:
                assert min(full) >= max(short)
            assert sum(n for _, n in got) <= od.demand


def test_nc_reproducible():
    inst = micro_instance(1)
    plan = solve_relaxation(inst)
    a = [round_nc(plan, inst, s).to_json() for s in range(30)]
    b = [round_nc(plan, inst, s).to_json() for s in range(30)]
    assert a == b


def test_selection_frequencies():
    inst = path_instance(2, [(0, 1, 2), (1, 2, 2)], capacity=2, rewards=[1, 1])
    entries = [("b0", "L", (2, 0), Fraction(1, 5)), ("b0", "L", (0, 2), Fraction(1, 2)),
               ("b0", "dummy", (0, 0), Fraction(3, 10))]
    plan = manual_plan(inst, entries)
    T = 4000
    params = RoundingParams(Fraction(2, 5), 1)
    for name, scale, rounder in [
        ("NC", 1, lambda s: round_nc(plan, inst, s)),
        ("LC", 1 - params.epsilon, lambda s: round_lc(plan, inst, params, s)),
    ]:
        counts = Counter()
        for s in range(T):
            col = rounder(s).columns[0]
            counts[None if col is None else col.key] += 1
        for (b, l, theta, w) in entries:
            p = float(scale * w)
            freq = counts[(b, l, theta)] / T
            assert abs(freq - p) <= 4 * math.sqrt(p * (1 - p) / T), name


def test_lc_zero_costs_never_discards():
    inst = micro_instance(2)
    plan = solve_relaxation(inst)
    params = RoundingParams(0.3, 1)
    outs = [round_lc(plan, inst, params, s) for s in range(200)]
    assert not any(o.discarded for o in outs)
    assert all(check_feasibility(o, inst, 1).ok for o in outs)


def test_lc_rejects_expensive_weighted_line():
    inst = path_instance(2, [(0, 2, 1)], costs=[Fraction(1, 2)])
    plan = manual_plan(inst, [("b0", "L", (1,), 1)])
    with pytest.raises(AssumptionViolation):
        round_lc(plan, inst, RoundingParams(0.2, 1), 0)


class _LooseParams(RoundingParams):
    @property
    def delta(self):
        return Fraction(1)


def test_lc_discards_on_budget_violation():
    inst = path_instance(2, [(0, 2, 2)], n_buses=2, capacity=1,
                         costs=[Fraction(3, 5), Fraction(3, 5)])
    plan = manual_plan(inst, [("b0", "L", (1,), 1), ("b1", "L", (1,), 1)])
    params = _LooseParams(Fraction(2, 5), 1)
    outs = [round_lc(plan, inst, params, s) for s in range(300)]
    discarded = [o for o in outs if o.discarded]
    assert discarded, "both buses are sampled together with probability 0.81"
    for o in discarded:
        assert o.reward == 0 and o.xi == {}
        assert set(o.assignment.values()) == {"dummy"}
    for o in outs:
        assert check_feasibility(o, inst, 1).ok


def test_feasibility_flags_double_served_od():
    inst = path_instance(2, [(0, 2, 2)], n_buses=2, capacity=2)
    plan = IntegralPlan({"b0": "L", "b1": "L"},
                        {("b0", ("v0", "v2")): 2, ("b1", ("v0", "v2")): 1},
                        Fraction(3), (Fraction(0),))
    rep = check_feasibility(plan, inst)
    assert not rep.ok
    assert any("('v0', 'v2')" in v and "over-served" in v for v in rep.violations)


def test_feasibility_other_violations():
    inst = path_instance(2, [(0, 2, 5), (1, 0, 1)], capacity=2, costs=[Fraction(1, 2)], rewards=[1, 0])
    plan = IntegralPlan({"b0": "L"}, {("b0", ("v0", "v2")): 3, ("b0", ("v1", "v0")): 1},
                        Fraction(7), (Fraction(0),))
    rep = check_feasibility(plan, inst, budget=Fraction(1, 4))
    text = " ".join(rep.violations)
    assert "exceeds capacity" in text
    assert "cannot serve" in text
    assert "exceeds budget" in text
    assert "reported reward" in text and "reported usage" in text


def test_empty_plan_is_feasible():
    inst = micro_instance(0, cost_regime="GENERAL")
    plan = empty_plan(inst)
    rep = check_feasibility(plan, inst)
    assert rep.ok and rep.reward == 0
