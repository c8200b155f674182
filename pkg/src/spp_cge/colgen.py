"""Conventional column generation with a final 0-1 solve on the working set."""

from __future__ import annotations

import enum
import json
import math
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .core import (EPS, DualSolution, LpStatus, Selection, SppError, SppInstance,
                   is_partition, make_selection, normalize_costs, reduced_costs,
                   validate_instance)
from .exact import ExactStatus, ResourceLimit, solve_exact
from .greedy import greedy_initial
from .lp import solve_dual_rmp


class RunStatus(str, enum.Enum):
    SOLVED = "Solved"
    GREEDY_INFEASIBLE = "GreedyInfeasible"
    FINAL_ILP_INFEASIBLE = "FinalIlpInfeasible"
    RESOURCE_LIMIT = "ResourceLimit"


class InvariantViolation(SppError):
    """A state the algorithm guarantees cannot happen was reached."""


@dataclass
class Limits:
    max_iterations: int | None = None      # default 10 * N
    time_limit: float | None = None        # seconds for the whole run
    ilp_node_limit: int | None = None


@dataclass
class IterationRecord:
    iteration: int
    working_set_size: int
    alpha: float
    generated: list[int]
    dual_objective: float
    beta: float | None = None
    eliminated: list[int] = field(default_factory=list)
    record_size: int | None = None

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None or not math.isfinite(v) else v
        return {
            "iteration": self.iteration,
            "working_set_size": self.working_set_size,
            "record_size": self.record_size,
            "alpha": num(self.alpha),
            "beta": num(self.beta),
            "generated": self.generated,
            "eliminated": self.eliminated,
            "dual_objective": self.dual_objective,
        }


@dataclass
class RunResult:
    method: str
    status: RunStatus
    selection: Selection | None
    trace: list[IterationRecord]
    iterations: int
    compression_ratio: float | None
    initial_set: list[int]
    final_set: list[int]
    scale: float = 1.0
    ilp_nodes: int = 0
    seconds: float = 0.0

    @property
    def objective(self) -> float | None:
        return None if self.selection is None else self.selection.objective


def trace_to_jsonl(trace: Iterable[IterationRecord]) -> str:
    return "".join(json.dumps(rec.to_dict()) + "\n" for rec in trace)


def generation_candidates_strict(instance: SppInstance, excluded: Iterable[int],
                                 duals: DualSolution | np.ndarray,
                                 rc: np.ndarray | None = None) -> tuple[float, set[int]]:
    """Minimum reduced cost over the pool minus ``excluded``, and the columns
    attaining it when it is negative."""
    if rc is None:
        rc = reduced_costs(instance, duals)
    mask = np.ones(instance.num_columns, dtype=bool)
    mask[list(excluded)] = False
    if not mask.any():
        return math.inf, set()
    alpha = float(rc[mask].min())
    hit = mask & (rc < -EPS) & (np.abs(rc - alpha) <= EPS)
    return alpha, set(np.flatnonzero(hit).tolist())


def _start(instance: SppInstance):
    validate_instance(instance)
    work, scale = normalize_costs(instance)
    k_ini = greedy_initial(work)
    ok = is_partition(work, k_ini)
    return work, scale, sorted(k_ini.chosen), ok


def _finish(method, instance, work, scale, trace, k_ini, K, limits, t0) -> RunResult:
    final = sorted(K)
    try:
        ex = solve_exact(work, final, node_limit=limits.ilp_node_limit)
    except ResourceLimit:
        return RunResult(method, RunStatus.RESOURCE_LIMIT, None, trace, len(trace),
                         len(final) / work.num_columns, k_ini, final, scale,
                         seconds=time.perf_counter() - t0)
    if ex.status is not ExactStatus.OPTIMAL:
        raise InvariantViolation(
            f"{method}: final 0-1 problem infeasible although it contains the greedy partition")
    # objective reported on the caller's cost scale
    sel = make_selection(instance, ex.selection.chosen)
    return RunResult(method, RunStatus.SOLVED, sel, trace, len(trace),
                     len(final) / work.num_columns, k_ini, final, scale, ex.nodes_explored,
                     time.perf_counter() - t0)


def _limit_hit(limits: Limits, n: int, it: int, t0: float) -> bool:
    cap = limits.max_iterations if limits.max_iterations is not None else 10 * n
    if it >= cap:
        return True
    return limits.time_limit is not None and time.perf_counter() - t0 > limits.time_limit


def run_conventional(instance: SppInstance, limits: Limits | None = None) -> RunResult:
    """Column generation with free duals and strictly negative pricing.

    Starts from the greedy partition, adds every minimum-reduced-cost column
    while that minimum is negative, then solves the 0-1 problem over the
    columns collected.
    """
    limits = limits or Limits()
    t0 = time.perf_counter()
    work, scale, k_ini, ok = _start(instance)
    if not ok:
        return RunResult("conventional", RunStatus.GREEDY_INFEASIBLE, None, [], 0, None,
                         k_ini, k_ini, scale, seconds=time.perf_counter() - t0)
    K = set(k_ini)
    trace: list[IterationRecord] = []
    while True:
        if _limit_hit(limits, work.num_columns, len(trace), t0):
            return RunResult("conventional", RunStatus.RESOURCE_LIMIT, None, trace, len(trace),
                             len(K) / work.num_columns, k_ini, sorted(K), scale,
                             seconds=time.perf_counter() - t0)
        duals = solve_dual_rmp(work, sorted(K), bounded=False)
        if duals.status is not LpStatus.OPTIMAL:
            raise InvariantViolation(f"restricted dual is {duals.status.value} "
                                     "although the working set holds a partition")
        alpha, gen = generation_candidates_strict(work, K, duals)
        trace.append(IterationRecord(len(trace) + 1, len(K), alpha, sorted(gen),
                                     duals.objective))
        if not gen:
            break
        K |= gen
    return _finish("conventional", instance, work, scale, trace, k_ini, K, limits, t0)
