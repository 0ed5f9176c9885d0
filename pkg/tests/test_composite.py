import math
from fractions import Fraction

import pytest

from lprc.composite import (
    EnumerationCapExceeded, a_delta_bound, algorithm_c, algorithm_c_tol, enumerate_a_delta,
    prepare_c, prepare_c_tol,
)
from lprc.rounding import RoundingParams, check_feasibility

from builders import micro_instance, path_instance
from oracles import naive_a_delta


def test_no_high_cost_lines_gives_only_empty():
    inst = path_instance(2, [(0, 2, 1)], n_buses=3)
    got = list(enumerate_a_delta(inst, Fraction(1, 100)))
    assert len(got) == 1 and got[0].omega == ()


def test_budget_forces_three_elements():
    inst = path_instance(2, [(0, 2, 1)], n_buses=2, costs=[Fraction(3, 5), Fraction(3, 5)])
    got = [a.as_dict() for a in enumerate_a_delta(inst, Fraction(1, 10))]
    assert got == [{}, {"b1": "L"}, {"b0": "L"}]


def test_matches_naive_enumerator():
    for seed in range(10):
        inst = micro_instance(seed, cost_regime="GENERAL", K=1 + seed % 2, n_buses=4,
                              general_cost=(0.1, 0.6))
        for delta in (Fraction(1, 5), Fraction(1, 2)):
            got = list(enumerate_a_delta(inst, delta))
            ref = naive_a_delta(inst, delta)
            assert sorted(sorted(a.as_dict().items()) for a in got) == \
                sorted(sorted(o.items()) for o in ref)
            for a in got:
                use = [sum((inst.cost(b, l, k) for b, l in a.omega), Fraction(0))
                       for k in range(inst.K)]
                assert tuple(use) == a.consumption and max(use) <= 1
            assert math.log(len(got)) <= a_delta_bound(inst, delta)


def test_enumeration_cap():
    inst = micro_instance(0, cost_regime="GENERAL", n_buses=4, general_cost=(0.1, 0.2))
    with pytest.raises(EnumerationCapExceeded):
        list(enumerate_a_delta(inst, Fraction(1, 20), cap=3))


def test_c_all_low_cost_takes_low_cost_branch():
    inst = micro_instance(1, cost_regime="SMALL")
    prep = prepare_c(inst, 0.2)
    assert prep.n_assignments == 1 and prep.omega_star == {}
    assert prep.branch == "LOW_COST"
    assert prep.gamma_delta >= prep.f_star


def test_c_all_high_cost_takes_fixed_branch():
    inst = micro_instance(1, cost_regime="GENERAL", general_cost=(0.3, 0.6))
    prep = prepare_c(inst, 0.2)
    assert prep.gamma_delta == 0
    assert prep.branch == "FIXED"
    assert prep.f_star > 0
    for seed in range(50):
        out = algorithm_c(inst, 0.2, seed)
        assert set(out.assignment.items()) <= set(prep.omega_star.items()) | \
            {(b.id, "dummy") for b in inst.buses}
        assert check_feasibility(out, inst, 1).ok


def test_c_eta_range():
    inst = micro_instance(0)
    with pytest.raises(ValueError):
        prepare_c(inst, 0.3)


def test_c_tol_all_low_cost_scales_by_one_plus_tau():
    delta = Fraction(2, 10) ** 3 / 256 * Fraction(4, 10)
    costs = [delta / 2, delta, delta / 3]
    inst = path_instance(3, [(0, 2, 2), (1, 3, 2)], n_buses=3, capacity=2, costs=costs)
    prep = prepare_c_tol(inst, Fraction(2, 10), Fraction(4, 10))
    assert prep.delta == delta
    assert prep.n_assignments == 1 and prep.omega_star == {}
    for m, c in enumerate(costs):
        assert prep.cost_overlay[(f"b{m}", "L")] == (c / Fraction(14, 10),)


def test_c_tol_usage_within_tolerance_every_seed():
    for seed in range(4):
        inst = micro_instance(seed, cost_regime="GENERAL", K=2, general_cost=(0.2, 0.5))
        prep = prepare_c_tol(inst, 0.3, 0.25)
        assert prep.budget == Fraction(5, 4)
        for s in range(100):
            out = prep.round(inst, s)
            assert all(u <= Fraction(5, 4) for u in out.usage)
            assert check_feasibility(out, inst, prep.budget).ok


def test_c_tol_parameter_range():
    inst = micro_instance(0)
    for tau in (0, 0.5, 0.7):
        with pytest.raises(ValueError):
            prepare_c_tol(inst, 0.2, tau)


def test_composites_deterministic():
    inst = micro_instance(5, cost_regime="GENERAL", general_cost=(0.1, 0.6))
    for s in range(10):
        assert algorithm_c(inst, 0.2, s) == algorithm_c(inst, 0.2, s)
        assert algorithm_c_tol(inst, 0.2, 0.1, s) == algorithm_c_tol(inst, 0.2, 0.1, s)


def test_c_tol_delta_definition():
    inst = micro_instance(0, K=2)
    prep = prepare_c_tol(inst, Fraction(1, 5), Fraction(1, 10))
    assert prep.delta == Fraction(1, 10) * RoundingParams(Fraction(1, 5), 2).delta
