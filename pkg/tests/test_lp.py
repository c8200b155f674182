import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from spp_cge.core import LpStatus, SppInstance, objective
from spp_cge.lp import (LinearProgram, Relation, Sense, check_outcome, dual_rmp, format_lp,
                        solve, solve_dual_rmp)

from support import all_partitions, highs_dual_objective, instances

FREE = (-math.inf, math.inf)


def test_single_bound_binds():
    lp = LinearProgram.build("max", [1.0], [([1.0], "<=", 0.4)], [(0.0, 1.0)])
    out = solve(lp)
    assert out.status is LpStatus.OPTIMAL and out.objective == pytest.approx(0.4, abs=1e-9)


def test_free_without_constraints_is_unbounded():
    lp = LinearProgram.build("max", [1.0], [], [FREE])
    assert solve(lp).status is LpStatus.UNBOUNDED


def test_three_free_duals():
    cons = [([1, 1, 0], "<=", 0.5), ([0, 0, 1], "<=", 0.4)]
    lp = LinearProgram.build("max", [1, 1, 1], cons, [FREE] * 3)
    ref = linprog(-np.ones(3), A_ub=[[1, 1, 0], [0, 0, 1]], b_ub=[0.5, 0.4],
                  bounds=[(None, None)] * 3, method="highs")
    assert ref.status == 0 and -ref.fun == pytest.approx(0.9)
    out = solve(lp)
    assert out.status is LpStatus.OPTIMAL
    assert out.objective == pytest.approx(-ref.fun, abs=1e-9)


def test_infeasible_is_classified():
    lp = LinearProgram.build("min", [1.0, 1.0], [([1, 1], ">=", 3.0), ([1, 0], "<=", 1.0)],
                             [(0, 1), (0, 1)])
    assert solve(lp).status is LpStatus.INFEASIBLE


def test_equality_rows_and_negative_bounds():
    lp = LinearProgram.build("min", [1.0, -2.0, 0.5],
                             [([1, 1, 1], "=", 1.0), ([1, -1, 0], ">=", -2.0)],
                             [(-1.0, 2.0), (-3.0, 1.0), (0.0, math.inf)])
    out = solve(lp)
    ref = linprog([1, -2, 0.5], A_eq=[[1, 1, 1]], b_eq=[1], A_ub=[[-1, 1, 0]], b_ub=[2],
                  bounds=[(-1, 2), (-3, 1), (0, None)], method="highs")
    assert out.objective == pytest.approx(ref.fun, abs=1e-9)
    assert check_outcome(lp, out) == []


def test_bad_shapes_rejected():
    with pytest.raises(ValueError):
        LinearProgram.build("max", [1.0, 2.0], [([1.0], "<=", 1.0)])
    with pytest.raises(ValueError):
        LinearProgram.build("max", [1.0], [], [(1.0, 0.0)])


class TestDualRmp:
    def test_bounded_two_columns(self):
        inst = SppInstance.from_pairs(3, [([1, 2], 0.5), ([3], 0.4)], one_based=True)
        status, ref = highs_dual_objective(inst, [0, 1], True)
        assert status == "Optimal" and ref == pytest.approx(0.9)
        got = solve_dual_rmp(inst, [0, 1], bounded=True)
        assert got.status is LpStatus.OPTIMAL and got.objective == pytest.approx(ref, abs=1e-9)

    def test_bounded_one_wide_column(self):
        inst = SppInstance.from_pairs(2, [([1, 2], 1.0)], one_based=True)
        assert highs_dual_objective(inst, [0], True)[1] == pytest.approx(1.0)
        got = solve_dual_rmp(inst, [0], bounded=True)
        assert got.objective == pytest.approx(1.0, abs=1e-9)
        assert np.all(got.values >= -1e-9) and np.all(got.values <= 1 + 1e-9)

    def test_free_single(self):
        inst = SppInstance.from_pairs(1, [([1], 0.7)], one_based=True)
        got = solve_dual_rmp(inst, [0], bounded=False)
        assert got.objective == pytest.approx(0.7, abs=1e-9)

    def test_free_uncovered_row_is_unbounded(self):
        inst = SppInstance.from_pairs(2, [([1], 0.7)], one_based=True)
        assert solve_dual_rmp(inst, [0], bounded=False).status is LpStatus.UNBOUNDED

    def test_lp_dump(self):
        inst = SppInstance.from_pairs(2, [([1, 2], 0.5)], one_based=True)
        text = format_lp(dual_rmp(inst, [0], bounded=False))
        assert text.startswith("Maximize\n obj: + 1.0 x0 + 1.0 x1\n")
        assert " c0: + 1.0 x0 + 1.0 x1 <= 0.5" in text and " x1 free" in text


@st.composite
def small_lps(draw):
    n = draw(st.integers(1, 6))
    m = draw(st.integers(0, 6))
    coef = st.integers(-3, 3).map(float)
    c = [draw(coef) for _ in range(n)]
    cons = []
    for _ in range(m):
        row = [draw(coef) for _ in range(n)]
        cons.append((row, draw(st.sampled_from(["<=", "=", ">="])), draw(st.integers(-4, 4))))
    bounds = []
    for _ in range(n):
        kind = draw(st.integers(0, 3))
        lo = draw(st.integers(-3, 1))
        hi = lo + draw(st.integers(0, 4))
        bounds.append([(lo, hi), (lo, math.inf), (-math.inf, hi), FREE][kind])
    return LinearProgram.build(draw(st.sampled_from(["max", "min"])), c, cons, bounds)


def highs(lp: LinearProgram):
    sign = -1.0 if lp.sense.value == "Maximize" else 1.0
    dense = lp.matrix.toarray()
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for row, rel, b in zip(dense, lp.relations, lp.rhs):
        if rel.value == "=":
            a_eq.append(row), b_eq.append(b)
        elif rel.value == "<=":
            a_ub.append(row), b_ub.append(b)
        else:
            a_ub.append(-row), b_ub.append(-b)
    bounds = [(None if math.isinf(lo) else lo, None if math.isinf(hi) else hi)
              for lo, hi in zip(lp.lower, lp.upper)]
    kw = dict(A_ub=a_ub or None, b_ub=b_ub or None, A_eq=a_eq or None, b_eq=b_eq or None,
              bounds=bounds, method="highs")
    res = linprog(sign * lp.objective, **kw)
    if res.status == 2:
        # presolve may report "infeasible or unbounded"; settle it with a zero objective
        if linprog(np.zeros(lp.num_vars), **kw).status == 0:
            return 3, None
    return res.status, (sign * res.fun if res.status == 0 else None)


@settings(max_examples=300, deadline=None)
@given(small_lps())
def test_agrees_with_highs(lp):
    status, ref = highs(lp)
    out = solve(lp)
    expected = {0: LpStatus.OPTIMAL, 2: LpStatus.INFEASIBLE, 3: LpStatus.UNBOUNDED}[status]
    assert out.status is expected
    if expected is LpStatus.OPTIMAL:
        assert out.objective == pytest.approx(ref, abs=1e-7)
        assert check_outcome(lp, out) == []


@settings(max_examples=100, deadline=None)
@given(instances(max_m=7, max_n=10), st.data())
def test_restricted_duals(instance, data):
    K = sorted(data.draw(st.sets(st.integers(0, instance.num_columns - 1), min_size=1)))
    free = solve_dual_rmp(instance, K, bounded=False)
    boxed = solve_dual_rmp(instance, K, bounded=True)
    status, ref = highs_dual_objective(instance, K, False)
    assert free.status.value == status
    assert boxed.status is LpStatus.OPTIMAL
    assert boxed.objective == pytest.approx(highs_dual_objective(instance, K, True)[1], abs=1e-7)
    assert boxed.objective <= instance.num_elements + 1e-9
    assert boxed.objective == pytest.approx(float(np.sum(boxed.values)), abs=1e-9)
    if free.status is LpStatus.OPTIMAL:
        assert free.objective == pytest.approx(ref, abs=1e-7)
        # adding bounds can only lower the maximum
        assert boxed.objective <= free.objective + 1e-7
    # weak duality against every partition drawn from K
    sub = SppInstance.from_pairs(instance.num_elements,
                                 [(instance.columns[j].rows, instance.columns[j].cost) for j in K])
    for part in all_partitions(sub):
        cost = objective(sub, part)
        assert boxed.objective <= cost + 1e-7
        assert free.objective <= cost + 1e-7


@settings(max_examples=40, deadline=None)
@given(small_lps())
def test_resolve_is_deterministic(lp):
    a, b = solve(lp), solve(lp)
    assert a.status is b.status
    if a.status is LpStatus.OPTIMAL:
        assert a.objective == b.objective


@settings(max_examples=150, deadline=None)
@given(instances(max_m=7, max_n=14))
def test_relaxation_duals_certify_the_optimum(instance):
    m, n = instance.num_elements, instance.num_columns
    A = instance.incidence.tocsc()
    lp = LinearProgram(Sense.MINIMIZE, instance.costs, A, (Relation.EQ,) * m,
                       np.ones(m), np.zeros(n), np.ones(n))
    out = solve(lp)
    if out.status is not LpStatus.OPTIMAL:
        return
    d = instance.costs - A.T @ out.duals
    x = out.values
    # complementary signs for a box [0, 1]: at zero d >= 0, at one d <= 0, in between d = 0
    assert np.all(d[x < 1e-7] >= -1e-7)
    assert np.all(d[x > 1 - 1e-7] <= 1e-7)
    inside = (x > 1e-7) & (x < 1 - 1e-7)
    assert np.all(np.abs(d[inside]) <= 1e-7)
    # the dual value of the box-constrained problem equals the primal objective
    assert out.duals.sum() + np.minimum(d, 0).sum() == pytest.approx(out.objective, abs=1e-7)
