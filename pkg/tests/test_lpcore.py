from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from lprc.lpcore import LpProblem, Sense, Status, count_interior, solve_lp, to_lp_format


def two_var():
    p = LpProblem()
    x = p.add_var(2, name="x")
    y = p.add_var(3, name="y")
    p.add_row({x: 1, y: 1}, Sense.LE, 4)
    p.add_row({x: 1, y: 3}, Sense.LE, 6)
    return p


def test_single_bound_row():
    p = LpProblem()
    x = p.add_var(1)
    p.add_row({x: 1}, Sense.LE, 3)
    sol = solve_lp(p)
    assert sol.status is Status.OPTIMAL
    assert sol.x == pytest.approx([3])
    assert sol.duals == pytest.approx([1])


def test_unbounded_without_rows():
    p = LpProblem()
    p.add_var(1)
    assert solve_lp(p).status is Status.UNBOUNDED


def test_two_variable_vertex():
    # vertices (0,0), (4,0), (0,2), (3,1) score 0, 8, 6, 9
    vertices = [(0, 0), (4, 0), (0, 2), (3, 1)]
    best = max(vertices, key=lambda v: 2 * v[0] + 3 * v[1])
    sol = solve_lp(two_var())
    assert sol.status is Status.OPTIMAL
    assert sol.x == pytest.approx(list(best))
    assert sol.objective == pytest.approx(9)
    assert sol.duals == pytest.approx([1.5, 0.5])


def test_exact_mode_is_rational():
    sol = solve_lp(two_var(), exact=True)
    assert sol.objective == Fraction(9)
    assert sol.duals == [Fraction(3, 2), Fraction(1, 2)]
    assert all(isinstance(v, Fraction) for v in sol.x)


def test_infeasible():
    p = LpProblem()
    x = p.add_var(1)
    p.add_row({x: 1}, Sense.LE, 1)
    p.add_row({x: 1}, Sense.EQ, 2)
    assert solve_lp(p).status is Status.INFEASIBLE


def test_equality_and_negative_rhs():
    # max x + y  s.t. x - y = -1, x <= 2
    p = LpProblem()
    x, y = p.add_var(1), p.add_var(1)
    p.add_row({x: 1, y: -1}, Sense.EQ, -1)
    p.add_row({x: 1}, Sense.LE, 2)
    sol = solve_lp(p, exact=True)
    assert sol.x == [2, 3]
    assert sol.objective == 5
    assert sol.duals == [-1, 2]


def test_upper_bounds_and_bound_duals():
    p = LpProblem()
    x = p.add_var(5, upper=2)
    y = p.add_var(1, upper=10)
    p.add_row({x: 1, y: 1}, Sense.LE, 3)
    sol = solve_lp(p, exact=True)
    assert sol.x == [2, 1]
    assert sol.objective == 11


def test_beale_cycling_example_terminates():
    # classic degenerate example on which the textbook rule cycles
    p = LpProblem()
    c = [Fraction(3, 4), -150, Fraction(1, 50), -6]
    v = [p.add_var(ci) for ci in c]
    p.add_row(dict(zip(v, [Fraction(1, 4), -60, Fraction(-1, 25), 9])), Sense.LE, 0)
    p.add_row(dict(zip(v, [Fraction(1, 2), -90, Fraction(-1, 50), 3])), Sense.LE, 0)
    p.add_row({v[2]: 1}, Sense.LE, 1)
    sol = solve_lp(p, exact=True, bland_after=0)
    assert sol.status is Status.OPTIMAL
    assert sol.objective == Fraction(1, 20)
    sol = solve_lp(p)
    assert sol.objective == pytest.approx(0.05)


def test_unknown_variable_rejected():
    p = LpProblem()
    with pytest.raises(ValueError):
        p.add_row({0: 1}, Sense.LE, 1)


def test_lp_format_dump():
    text = to_lp_format(two_var())
    assert text.startswith("Maximize")
    assert "x + 3 y <= 6" in text
    assert text.rstrip().endswith("End")


@st.composite
def random_lp(draw):
    n = draw(st.integers(1, 5))
    m = draw(st.integers(1, 5))
    ints = st.integers(-4, 6)
    c = [draw(ints) for _ in range(n)]
    A = [[draw(st.integers(0, 5)) for _ in range(n)] for _ in range(m)]
    b = [draw(st.integers(0, 10)) for _ in range(m)]
    upper = [draw(st.one_of(st.none(), st.integers(0, 6))) for _ in range(n)]
    eq = draw(st.booleans())
    return c, A, b, upper, eq


@settings(max_examples=120, deadline=None)
@given(random_lp())
def test_matches_highs_and_certifies(data):
    c, A, b, upper, eq = data
    p = LpProblem()
    for cj, uj in zip(c, upper):
        p.add_var(cj, upper=uj)
    for i, (row, bi) in enumerate(zip(A, b)):
        sense = Sense.EQ if eq and i == 0 else Sense.LE
        p.add_row({j: a for j, a in enumerate(row) if a}, sense, bi)
    kwargs = dict(bounds=[(0, u) for u in upper], method="highs")
    if eq:
        kwargs.update(A_eq=np.array(A[:1]), b_eq=b[:1])
        if len(A) > 1:
            kwargs.update(A_ub=np.array(A[1:]), b_ub=b[1:])
    else:
        kwargs.update(A_ub=np.array(A), b_ub=b)
    ref = linprog(-np.array(c, dtype=float), **kwargs)
    for exact in (False, True):
        sol = solve_lp(p, exact=exact)
        if ref.status == 2:
            assert sol.status is Status.INFEASIBLE
            continue
        if ref.status == 3:
            assert sol.status is Status.UNBOUNDED
            continue
        assert sol.status is Status.OPTIMAL
        assert float(sol.objective) == pytest.approx(-ref.fun, rel=1e-9, abs=1e-9)
        # strong duality
        dual = sum(y * bi for y, bi in zip(sol.duals, b))
        dual += sum(z * u for z, u in zip(sol.bound_duals, [u for u in upper if u is not None]))
        assert float(dual) == pytest.approx(float(sol.objective), rel=1e-9, abs=1e-9)
        if exact:
            assert dual == sol.objective
        # basic-solution property
        n_rows = len(A) + sum(u is not None for u in upper)
        assert count_interior(sol.x, upper) <= n_rows
