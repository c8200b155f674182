"""Column generation and elimination.

Differs from :mod:`spp_cge.colgen` in four places: duals are boxed to
[0, 1]; a column is generated when its reduced cost is the minimum and
non-positive; a working column whose reduced cost is the maximum and at
least 1 is eliminated; and the greedy columns are put back before the final
0-1 solve. Generated columns are remembered in a record ``L`` and never
priced again, which bounds the loop by ``2 N`` passes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .colgen import (InvariantViolation, IterationRecord, Limits, RunResult, RunStatus,
                     _finish, _limit_hit, _start)
from .core import EPS, DualSolution, LpStatus, SppInstance, reduced_costs
from .lp import solve_dual_rmp


@dataclass
class CgeState:
    K: set[int]
    L: set[int]
    K_ini: frozenset[int]
    eliminated: set[int] = field(default_factory=set)


def generation_candidates_relaxed(instance: SppInstance, record: Iterable[int],
                                  duals: DualSolution | np.ndarray,
                                  rc: np.ndarray | None = None) -> tuple[float, set[int]]:
    if rc is None:
        rc = reduced_costs(instance, duals)
    mask = np.ones(instance.num_columns, dtype=bool)
    mask[list(record)] = False
    if not mask.any():
        return math.inf, set()
    alpha = float(rc[mask].min())
    hit = mask & (rc <= EPS) & (np.abs(rc - alpha) <= EPS)
    return alpha, set(np.flatnonzero(hit).tolist())


def elimination_candidates(instance: SppInstance, working: Iterable[int],
                           duals: DualSolution | np.ndarray,
                           rc: np.ndarray | None = None) -> tuple[float, set[int]]:
    if rc is None:
        rc = reduced_costs(instance, duals)
    ids = np.asarray(sorted(working), dtype=np.int64)
    if len(ids) == 0:
        return -math.inf, set()
    vals = rc[ids]
    beta = float(vals.max())
    hit = (vals >= 1.0 - EPS) & (np.abs(vals - beta) <= EPS)
    return beta, set(ids[hit].tolist())


def run_proposed(instance: SppInstance, limits: Limits | None = None) -> RunResult:
    """Column generation and elimination; costs above 1 are rescaled first."""
    limits = limits or Limits()
    t0 = time.perf_counter()
    work, scale, k_ini, ok = _start(instance)
    if not ok:
        return RunResult("proposed", RunStatus.GREEDY_INFEASIBLE, None, [], 0, None,
                         k_ini, k_ini, scale, seconds=time.perf_counter() - t0)
    n = work.num_columns
    st = CgeState(set(k_ini), set(k_ini), frozenset(k_ini))
    trace: list[IterationRecord] = []
    while True:
        if _limit_hit(limits, n, len(trace), t0):
            return RunResult("proposed", RunStatus.RESOURCE_LIMIT, None, trace, len(trace),
                             len(st.K) / n, k_ini, sorted(st.K), scale,
                             seconds=time.perf_counter() - t0)
        duals = solve_dual_rmp(work, sorted(st.K), bounded=True)
        if duals.status is not LpStatus.OPTIMAL:
            raise InvariantViolation(f"bounded restricted dual is {duals.status.value}")
        rc = reduced_costs(work, duals)
        alpha, gen = generation_candidates_relaxed(work, st.L, duals, rc)
        beta, eli = elimination_candidates(work, st.K, duals, rc)
        trace.append(IterationRecord(len(trace) + 1, len(st.K), alpha, sorted(gen),
                                     duals.objective, beta, sorted(eli), len(st.L)))
        if not gen and not eli:
            break
        st.K = (st.K | gen) - eli
        st.L |= gen
        st.eliminated |= eli
    st.K |= st.K_ini
    return _finish("proposed", instance, work, scale, trace, k_ini, st.K, limits, t0)
