"""Exact set partitioning: LP-based branch-and-bound and a brute-force oracle."""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import (EPS, LpStatus, Selection, SppError, SppInstance, is_partition,
                   make_selection)
from .greedy import greedy_initial
from .lp import OPT_TOL, LinearProgram, LpOutcome, Relation, Sense, solve

INT_TOL = 1e-6
BRUTE_FORCE_MAX_COLUMNS = 25
PRICE_ABOVE = 150       # node LPs with more columns are solved by pricing a working set
COVERS_PER_ROW = 3


class ExactStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"


class ResourceLimit(SppError):
    """Node or time cap hit before optimality was proven."""

    def __init__(self, message: str, incumbent: Selection | None = None, nodes: int = 0):
        super().__init__(message)
        self.incumbent = incumbent
        self.nodes = nodes


class TooLarge(SppError):
    pass


@dataclass(frozen=True)
class ExactResult:
    status: ExactStatus
    selection: Selection | None = None
    nodes_explored: int = 0
    root_bound: float | None = None

    @property
    def objective(self) -> float | None:
        return None if self.selection is None else self.selection.objective


def remove_dominated(instance: SppInstance, allowed: Iterable[int]) -> list[int]:
    """Drop columns whose row set repeats a cheaper (or equal, lower-id) column."""
    best: dict[tuple[int, ...], int] = {}
    for j in sorted(allowed):
        col = instance.columns[j]
        k = best.get(col.rows)
        if k is None or col.cost < instance.columns[k].cost:
            best[col.rows] = j
    return sorted(best.values())


def _cost_granularity(costs: np.ndarray) -> float | None:
    """Largest g with every cost an integer multiple of g (decimal costs only)."""
    for digits in range(7):
        scaled = costs * 10 ** digits
        ints = np.round(scaled)
        if np.all(np.abs(scaled - ints) < 1e-9 * np.maximum(1.0, scaled)):
            g = int(np.gcd.reduce(ints.astype(np.int64)))
            return g / 10 ** digits if g > 0 else None
    return None


def _box_lp(costs: np.ndarray, A) -> LinearProgram:
    m, n = A.shape
    return LinearProgram(Sense.MINIMIZE, costs, A.tocsc(), (Relation.EQ,) * m, np.ones(m),
                         np.zeros(n), np.ones(n))


def relaxation(costs: np.ndarray, A, start: Iterable[int] = ()) -> LpOutcome:
    """LP relaxation ``min c x, A x = 1, 0 <= x <= 1`` solved over a growing column subset.

    The subset starts from ``start`` plus the cheapest covers of each row and
    grows by the columns whose reduced cost is negative. Once none remain, the
    columns left out sit at zero with nonnegative reduced cost, which proves the
    restricted optimum optimal for the whole problem. Values and duals are
    returned for all columns.
    """
    n = A.shape[1]
    if n <= PRICE_ABOVE:
        return solve(_box_lp(costs, A))
    csc, csr = A.tocsc(), A.tocsr()
    size = np.diff(csc.indptr)
    ratio = costs / np.maximum(size, 1)
    work = set(int(j) for j in start)
    for r in range(A.shape[0]):
        cover = csr.indices[csr.indptr[r]:csr.indptr[r + 1]]
        work.update(int(j) for j in cover[np.lexsort((cover, ratio[cover]))][:COVERS_PER_ROW])
    batch = max(2 * A.shape[0], 20)
    iterations = 0
    while True:
        ids = np.array(sorted(work), dtype=np.int64)
        out = solve(_box_lp(costs[ids], csc[:, ids]))
        iterations += out.iterations
        if out.status is LpStatus.INFEASIBLE:
            full = solve(_box_lp(costs, csc))
            full.iterations += iterations
            return full
        if out.status is not LpStatus.OPTIMAL:
            return out
        reduced = costs - csc.T @ out.duals
        reduced[ids] = 0.0
        enter = np.flatnonzero(reduced < -OPT_TOL)
        if len(enter) == 0:
            values = np.zeros(n)
            values[ids] = out.values
            return LpOutcome(LpStatus.OPTIMAL, float(costs @ values), values, iterations,
                             out.duals)
        enter = enter[np.lexsort((enter, reduced[enter]))][:batch]
        work.update(int(j) for j in enter)


class _BranchAndBound:
    def __init__(self, instance: SppInstance, cols: list[int], node_limit, time_limit):
        self.inst = instance
        self.cols = np.asarray(cols, dtype=np.int64)
        self.A = instance.incidence[:, self.cols].tocsc()
        self.costs = instance.costs[self.cols]
        self.col_rows = [np.asarray(instance.columns[j].rows, dtype=np.int64) for j in cols]
        self.node_limit = node_limit
        self.deadline = None if time_limit is None else time.perf_counter() + time_limit
        self.gran = _cost_granularity(self.costs)
        self.nodes = 0
        self.best_val = math.inf
        self.best: list[int] | None = None
        self.root_bound: float | None = None

    def _offer(self, local: list[int]):
        val = float(self.costs[local].sum())
        if val < self.best_val - EPS:
            self.best_val = val
            self.best = sorted(local)

    def _prunable(self, bound, fixed_cost: float):
        total = np.asarray(bound) + fixed_cost
        if self.gran is not None:
            total = np.ceil((total - 1e-7) / self.gran) * self.gran
        return total >= self.best_val - EPS

    def run(self) -> None:
        ncols = len(self.cols)
        m = self.inst.num_elements
        # node: fixed ones, fixed zeros, parent LP support (all local indices)
        stack: list[tuple[tuple[int, ...], frozenset[int], np.ndarray]] = \
            [((), frozenset(), np.zeros(0, dtype=np.int64))]
        while stack:
            ones, zeros, support = stack.pop()
            self.nodes += 1
            if self.node_limit is not None and self.nodes > self.node_limit:
                raise ResourceLimit(f"node limit {self.node_limit} reached", nodes=self.nodes)
            if self.deadline is not None and time.perf_counter() > self.deadline:
                raise ResourceLimit("time limit reached", nodes=self.nodes)

            covered = np.zeros(m, dtype=bool)
            for j in ones:
                covered[self.col_rows[j]] = True
            free_rows = np.flatnonzero(~covered)
            fixed_cost = float(self.costs[list(ones)].sum()) if ones else 0.0
            if len(free_rows) == 0:
                self._offer(list(ones))
                continue
            alive = np.ones(ncols, dtype=bool)
            if zeros:
                alive[list(zeros)] = False
            if ones:
                alive[list(ones)] = False
                hit = np.flatnonzero(covered)
                alive &= np.asarray(self.A[hit, :].sum(axis=0)).ravel() == 0
            cand = np.flatnonzero(alive)
            sub = self.A[free_rows, :][:, cand]
            if np.any(np.diff(sub.tocsr().indptr) == 0):
                continue
            out = relaxation(self.costs[cand], sub, np.flatnonzero(np.isin(cand, support)))
            if out.status is LpStatus.INFEASIBLE:
                continue
            if out.status is not LpStatus.OPTIMAL:
                raise SppError(f"unexpected LP status {out.status} in branch-and-bound")
            if self.root_bound is None:
                self.root_bound = out.objective
            if self._prunable(out.objective, fixed_cost):
                continue
            x = out.values
            if self.best is not None:
                # columns at zero whose reduced cost alone closes the gap stay at zero below here
                reduced = self.costs[cand] - sub.T @ out.duals
                dead = (x <= INT_TOL) & (reduced > EPS)
                dead &= self._prunable(out.objective + reduced, fixed_cost)
                if dead.any():
                    zeros = zeros | frozenset(int(cand[i]) for i in np.flatnonzero(dead))
            frac = np.minimum(x, 1.0 - x)
            if np.all(frac <= INT_TOL):
                chosen = list(ones) + [int(cand[i]) for i in np.flatnonzero(x > 0.5)]
                if is_partition(self.inst, self.cols[chosen]):
                    self._offer(chosen)
                    continue
            # most fractional variable, lowest index on ties
            k = int(np.argmax(frac))
            j = int(cand[k])
            support = cand[x > INT_TOL]
            stack.append((ones, zeros | {j}, support))
            stack.append((tuple(sorted(ones + (j,))), zeros, support))


def solve_exact(instance: SppInstance, allowed: Iterable[int] | None = None,
                node_limit: int | None = None, time_limit: float | None = None,
                use_greedy_incumbent: bool = True) -> ExactResult:
    """Minimum-cost partition using only ``allowed`` columns (all when None).

    Raises :class:`ResourceLimit` when ``node_limit`` nodes or ``time_limit``
    seconds are exceeded before optimality is proven.
    """
    if allowed is None:
        allowed = range(instance.num_columns)
    allowed = sorted(set(allowed))
    if not allowed:
        return ExactResult(ExactStatus.INFEASIBLE)
    cols = remove_dominated(instance, allowed)
    covered = np.zeros(instance.num_elements, dtype=bool)
    for j in cols:
        covered[list(instance.columns[j].rows)] = True
    if not covered.all():
        return ExactResult(ExactStatus.INFEASIBLE)

    bnb = _BranchAndBound(instance, cols, node_limit, time_limit)
    if use_greedy_incumbent:
        sub = SppInstance.from_pairs(instance.num_elements,
                                     [(instance.columns[j].rows, instance.columns[j].cost)
                                      for j in cols])
        greedy = greedy_initial(sub)
        if is_partition(sub, greedy):
            bnb._offer(sorted(greedy.chosen))
    bnb.run()
    if bnb.best is None:
        return ExactResult(ExactStatus.INFEASIBLE, None, bnb.nodes, bnb.root_bound)
    sel = make_selection(instance, (int(bnb.cols[i]) for i in bnb.best))
    return ExactResult(ExactStatus.OPTIMAL, sel, bnb.nodes, bnb.root_bound)


def brute_force(instance: SppInstance) -> ExactResult:
    """Check all 2^N selections; for N <= 25 only.

    Among optimal selections (float costs within 1e-9 of the minimum) the one
    with the smallest exact objective wins, then the lexicographically
    smallest id list.
    """
    n = instance.num_columns
    if n > BRUTE_FORCE_MAX_COLUMNS:
        raise TooLarge(f"brute force is limited to {BRUTE_FORCE_MAX_COLUMNS} columns, got {n}")
    m = instance.num_elements
    words = (m + 63) // 64
    masks = np.zeros((n, words), dtype=np.uint64)
    for col in instance.columns:
        for r in col.rows:
            masks[col.id, r // 64] |= np.uint64(1) << np.uint64(r % 64)
    full = np.zeros(words, dtype=np.uint64)
    for r in range(m):
        full[r // 64] |= np.uint64(1) << np.uint64(r % 64)
    sizes = instance.sizes
    costs = instance.costs

    low = min(n, 16)
    lo_mask = np.zeros((1, words), dtype=np.uint64)
    lo_size = np.zeros(1, dtype=np.int64)
    lo_cost = np.zeros(1)
    for j in range(low):
        lo_mask = np.concatenate([lo_mask, lo_mask | masks[j]])
        lo_size = np.concatenate([lo_size, lo_size + sizes[j]])
        lo_cost = np.concatenate([lo_cost, lo_cost + costs[j]])

    best = math.inf
    cands: list[tuple[float, int]] = []
    for hi_bits in range(1 << (n - low)):
        hm = np.zeros(words, dtype=np.uint64)
        hs = 0
        hc = 0.0
        for t in range(n - low):
            if hi_bits >> t & 1:
                hm |= masks[low + t]
                hs += int(sizes[low + t])
                hc += costs[low + t]
        if hs > m:
            continue
        ok = (lo_size + hs == m) & np.all((lo_mask | hm) == full, axis=1)
        idx = np.flatnonzero(ok)
        if len(idx) == 0:
            continue
        tot = lo_cost[idx] + hc
        cmin = float(tot.min())
        if cmin > best + EPS:
            continue
        best = min(best, cmin)
        for i in idx[tot <= best + EPS]:
            cands.append((float(lo_cost[i] + hc), (hi_bits << low) | int(i)))

    if not cands:
        return ExactResult(ExactStatus.INFEASIBLE, None, 1 << n)
    sels = []
    for val, bits in cands:
        if val <= best + EPS:
            ids = [j for j in range(n) if bits >> j & 1]
            sels.append(make_selection(instance, ids))
    sel = min(sels, key=lambda s: (s.objective, s.sorted_ids()))
    return ExactResult(ExactStatus.OPTIMAL, sel, 1 << n)
