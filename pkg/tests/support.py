"""Shared fixtures, strategies and independent checkers for the test suite."""

from __future__ import annotations

import itertools
from pathlib import Path

import numpy as np
from hypothesis import strategies as st
from scipy.optimize import linprog

from spp_cge.core import SppInstance

FIXTURE_GTFS = Path(__file__).resolve().parents[1] / "src" / "spp_cge" / "data" / "fixture4"

# five columns over three elements; optimum {0, 1} at 0.9
FIVE = SppInstance.from_pairs(3, [([1, 2], 0.5), ([3], 0.4), ([1, 2, 3], 1.0),
                                  ([1], 0.3), ([2, 3], 0.6)], one_based=True)
TRIANGLE = SppInstance.from_pairs(3, [([1, 2], 1.0), ([2, 3], 1.0), ([1, 3], 1.0)],
                                  one_based=True)
SINGLE = SppInstance.from_pairs(1, [([1], 0.7)], one_based=True)


def random_instance(rng: np.random.Generator, m: int, n: int, decile: bool) -> SppInstance:
    pairs = []
    for _ in range(n):
        k = int(rng.integers(1, m + 1))
        rows = rng.choice(m, size=k, replace=False).tolist()
        cost = int(rng.integers(1, 11)) / 10 if decile else 1.0
        pairs.append((rows, cost))
    return SppInstance.from_pairs(m, pairs)


@st.composite
def instances(draw, max_m: int = 6, max_n: int = 10, costs=None):
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(1, max_n))
    cost_st = costs if costs is not None else st.sampled_from([0.1, 0.2, 0.3, 0.5, 0.7, 1.0])
    pairs = []
    for _ in range(n):
        rows = draw(st.sets(st.integers(0, m - 1), min_size=1, max_size=m))
        pairs.append((sorted(rows), draw(cost_st)))
    return SppInstance.from_pairs(m, pairs)


def all_partitions(instance: SppInstance) -> list[tuple[int, ...]]:
    """Every subset of columns that partitions the elements (itertools, small N)."""
    out = []
    m = instance.num_elements
    for r in range(1, min(m, instance.num_columns) + 1):
        for combo in itertools.combinations(range(instance.num_columns), r):
            seen = [0] * m
            for j in combo:
                for i in instance.columns[j].rows:
                    seen[i] += 1
            if all(c == 1 for c in seen):
                out.append(combo)
    return out


def enumerated_optimum(instance: SppInstance) -> float | None:
    parts = all_partitions(instance)
    if not parts:
        return None
    return min(sum(instance.columns[j].cost for j in p) for p in parts)


def highs_dual_objective(instance: SppInstance, K, bounded: bool) -> tuple[str, float | None]:
    """Restricted dual solved by HiGHS through scipy, as an outside reference."""
    ids = sorted(K)
    a = instance.incidence[:, ids].T.toarray()
    b = instance.costs[ids]
    bounds = (0, 1) if bounded else (None, None)
    res = linprog(-np.ones(instance.num_elements), A_ub=a, b_ub=b, bounds=bounds,
                  method="highs")
    if res.status == 0:
        return "Optimal", -res.fun
    return {2: "Infeasible", 3: "Unbounded"}.get(res.status, "Other"), None


def replay_proposed_trace(result) -> list[str]:
    """Rebuild K and L from a column-generation-and-elimination trace and list
    every broken invariant (empty list means the run is clean)."""
    problems = []
    K = set(result.initial_set)
    L = set(result.initial_set)
    eliminated: set[int] = set()
    for rec in result.trace:
        if rec.working_set_size != len(K):
            problems.append(f"it {rec.iteration}: recorded |K| {rec.working_set_size} != {len(K)}")
        if rec.record_size != len(L):
            problems.append(f"it {rec.iteration}: recorded |L| {rec.record_size} != {len(L)}")
        gen, eli = set(rec.generated), set(rec.eliminated)
        if gen & L:
            problems.append(f"it {rec.iteration}: regenerated {sorted(gen & L)}")
        if gen & eliminated:
            problems.append(f"it {rec.iteration}: eliminated column came back")
        if not eli <= K:
            problems.append(f"it {rec.iteration}: eliminated a column outside K")
        K = (K | gen) - eli
        L_before = set(L)
        L |= gen
        eliminated |= eli
        if not L_before <= L:
            problems.append(f"it {rec.iteration}: record shrank")
        if not K <= L:
            problems.append(f"it {rec.iteration}: K not inside L")
    if result.trace and (result.trace[-1].generated or result.trace[-1].eliminated):
        problems.append("last pass changed the working set")
    final = K | set(result.initial_set)
    if result.status.value == "Solved" and sorted(final) != result.final_set:
        problems.append("final set differs from K with the greedy columns restored")
    if not set(result.initial_set) <= set(result.final_set):
        problems.append("greedy columns missing from the final problem")
    return problems
