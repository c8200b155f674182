"""Bounded-variable revised simplex.

Every constraint row ``g_r x (<=|=|>=) h_r`` gets a logical variable ``s_r``
with ``g_r x + s_r = h_r`` and bounds chosen from the relation, so the
computational form is ``min c x  s.t.  G x + s = h,  l <= (x, s) <= u``.

The basis is kept as (basic structurals S, basic logical rows). Writing R for
the rows whose logical is nonbasic, ``|R| == |S|`` and every solve with the
basis reduces to the square kernel ``G[R, S]``. The kernel never exceeds
``min(rows, cols)``, which keeps pivots cheap both for the dual restricted
master (few variables, many rows) and for set-partitioning relaxations
(many variables, few rows).

Pricing is Dantzig's rule; after ``degenerate_limit`` consecutive degenerate
pivots it switches to Bland's rule until the next pivot that makes progress.
Infeasible starts go through a composite phase 1 that minimises the sum of
bound violations of basic variables.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg, sparse

from .core import EPS, DualSolution, LpStatus, SppError, SppInstance

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9


class NumericalFailure(SppError):
    """The simplex could not reach a trustworthy answer."""


class Sense(str, enum.Enum):
    MAXIMIZE = "Maximize"
    MINIMIZE = "Minimize"

    @classmethod
    def _missing_(cls, value):
        key = str(value).lower()[:3]
        return {"max": cls.MAXIMIZE, "min": cls.MINIMIZE}.get(key)


class Relation(str, enum.Enum):
    LE = "<="
    EQ = "="
    GE = ">="


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``sense c x`` subject to ``matrix x (relations) rhs`` and ``lower <= x <= upper``."""

    sense: Sense
    objective: np.ndarray
    matrix: sparse.csc_matrix
    relations: tuple[Relation, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        n = len(self.objective)
        m = len(self.rhs)
        if self.matrix.shape != (m, n):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match ({m}, {n})")
        if len(self.relations) != m:
            raise ValueError("one relation per constraint row is required")
        if len(self.lower) != n or len(self.upper) != n:
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @classmethod
    def build(cls, sense: Sense | str, objective: Sequence[float],
              constraints: Sequence[tuple[Sequence[float], Relation | str, float]] = (),
              bounds: Sequence[tuple[float, float]] | None = None) -> "LinearProgram":
        """Assemble from dense rows, e.g. ``([1, 1, 0], "<=", 0.5)``.

        ``bounds`` defaults to ``(0, inf)`` per variable; use ``-math.inf`` for
        a free lower bound.
        """
        c = np.asarray(objective, dtype=float)
        n = len(c)
        rows = []
        rels = []
        rhs = []
        for coeffs, rel, b in constraints:
            coeffs = np.asarray(coeffs, dtype=float)
            if len(coeffs) != n:
                raise ValueError(f"constraint has {len(coeffs)} coefficients, expected {n}")
            rows.append(coeffs)
            rels.append(Relation(rel))
            rhs.append(float(b))
        mat = sparse.csc_matrix(np.array(rows).reshape(len(rows), n))
        if bounds is None:
            bounds = [(0.0, math.inf)] * n
        lo = np.array([b[0] for b in bounds], dtype=float)
        hi = np.array([b[1] for b in bounds], dtype=float)
        return cls(Sense(sense), c, mat, tuple(rels), np.array(rhs, dtype=float), lo, hi)

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    @property
    def num_rows(self) -> int:
        return len(self.rhs)


@dataclass
class LpOutcome:
    status: LpStatus
    objective: float = math.nan
    values: np.ndarray | None = None
    iterations: int = 0
    # row prices of the minimisation form at the optimum (sign flipped for MAXIMIZE)
    duals: np.ndarray | None = None


@dataclass
class _Basis:
    struct: list[int] = field(default_factory=list)    # basic structurals, kernel column order
    krows: list[int] = field(default_factory=list)     # rows with nonbasic logical, kernel row order


class _Simplex:
    def __init__(self, lp: LinearProgram, degenerate_limit: int, max_iter: int):
        self.n = lp.num_vars
        self.m = lp.num_rows
        self.G = sparse.csc_matrix(lp.matrix, dtype=float)
        self.G.sort_indices()
        self.GT = self.G.T.tocsr()
        self.h = np.asarray(lp.rhs, dtype=float)
        c = np.asarray(lp.objective, dtype=float)
        self.c = -c if lp.sense is Sense.MAXIMIZE else c.copy()
        slo = np.empty(self.m)
        shi = np.empty(self.m)
        for r, rel in enumerate(lp.relations):
            if rel is Relation.LE:
                slo[r], shi[r] = 0.0, math.inf
            elif rel is Relation.GE:
                slo[r], shi[r] = -math.inf, 0.0
            else:
                slo[r], shi[r] = 0.0, 0.0
        self.lo = np.concatenate([lp.lower, slo])
        self.hi = np.concatenate([lp.upper, shi])
        self.degenerate_limit = degenerate_limit
        self.max_iter = max_iter
        self.iterations = 0

        nt = self.n + self.m
        self.x = np.zeros(nt)
        self.is_basic = np.zeros(nt, dtype=bool)
        self.is_basic[self.n:] = True
        for j in range(self.n):
            if math.isfinite(self.lo[j]):
                self.x[j] = self.lo[j]
            elif math.isfinite(self.hi[j]):
                self.x[j] = self.hi[j]
        self.basis = _Basis()
        self._dense_cols: dict[int, np.ndarray] = {}
        self._refactor()
        self._recompute_basics()

    # --- linear algebra with the basis ------------------------------------

    def _col(self, j: int) -> np.ndarray:
        col = self._dense_cols.get(j)
        if col is None:
            col = np.zeros(self.m)
            lo, hi = self.G.indptr[j], self.G.indptr[j + 1]
            col[self.G.indices[lo:hi]] = self.G.data[lo:hi]
            self._dense_cols[j] = col
        return col

    def _refactor(self):
        b = self.basis
        k = len(b.struct)
        self.logical_rows = np.flatnonzero(self.is_basic[self.n:])
        if k:
            self.S_cols = np.column_stack([self._col(j) for j in b.struct])
            kernel = self.S_cols[b.krows, :]
            self.lu = linalg.lu_factor(kernel, check_finite=False)
            if not np.all(np.isfinite(self.lu[0])) or \
                    np.min(np.abs(np.diag(self.lu[0]))) < 1e-12:
                raise NumericalFailure("singular basis kernel")
        else:
            self.S_cols = np.zeros((self.m, 0))
            self.lu = None

    def _ftran(self, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (z_S, z_full_rows) with B z = a; z_full_rows indexed by row for logicals."""
        b = self.basis
        if self.lu is not None:
            zs = linalg.lu_solve(self.lu, a[b.krows], check_finite=False)
            zl = a - self.S_cols @ zs
        else:
            zs = np.zeros(0)
            zl = a.copy()
        return zs, zl

    def _btran(self, cost_struct: np.ndarray, cost_logical: np.ndarray) -> np.ndarray:
        """Row prices pi with B^T pi = c_B (cost_logical indexed by row)."""
        pi = np.zeros(self.m)
        lr = self.logical_rows
        pi[lr] = cost_logical[lr]
        if self.lu is not None:
            rhs = cost_struct - self.S_cols[lr, :].T @ pi[lr]
            pi[self.basis.krows] = linalg.lu_solve(self.lu, rhs, trans=1, check_finite=False)
        return pi

    def _recompute_basics(self):
        n = self.n
        xn = np.where(self.is_basic[:n], 0.0, self.x[:n])
        sn = np.where(self.is_basic[n:], 0.0, self.x[n:])
        rhs = self.h - self.G @ xn - sn
        zs, zl = self._ftran(rhs)
        for pos, j in enumerate(self.basis.struct):
            self.x[j] = zs[pos]
        lr = self.logical_rows
        self.x[n + lr] = zl[lr]

    # --- pivoting ---------------------------------------------------------

    def _basic_vars(self) -> np.ndarray:
        return np.concatenate([np.array(self.basis.struct, dtype=np.int64),
                               self.n + self.logical_rows])

    def _infeasibility(self) -> tuple[np.ndarray, np.ndarray, float]:
        bv = self._basic_vars()
        xb = self.x[bv]
        below = xb < self.lo[bv] - FEAS_TOL
        above = xb > self.hi[bv] + FEAS_TOL
        total = float(np.sum((self.lo[bv] - xb)[below]) + np.sum((xb - self.hi[bv])[above]))
        return below, above, total

    def solve(self) -> LpOutcome:
        while True:
            below, above, infeas = self._infeasibility()
            if infeas > 0:
                status = self._run_phase(phase=1)
                if status is LpStatus.INFEASIBLE:
                    return LpOutcome(LpStatus.INFEASIBLE, iterations=self.iterations)
            status = self._run_phase(phase=2)
            if status is LpStatus.UNBOUNDED:
                return LpOutcome(LpStatus.UNBOUNDED, iterations=self.iterations)
            _, _, infeas = self._infeasibility()
            if infeas == 0:
                break
            # drift pushed a basic variable out of bounds: restore feasibility
        values = self.x[:self.n].copy()
        pi = self._btran(*self._phase_costs(2))
        return LpOutcome(LpStatus.OPTIMAL, float(self.c @ values), values, self.iterations, pi)

    def _phase_costs(self, phase: int) -> tuple[np.ndarray, np.ndarray]:
        if phase == 2:
            cs = self.c[self.basis.struct] if self.basis.struct else np.zeros(0)
            return cs, np.zeros(self.m)
        below, above, _ = self._infeasibility()
        cb = np.where(below, -1.0, np.where(above, 1.0, 0.0))
        k = len(self.basis.struct)
        cl = np.zeros(self.m)
        cl[self.logical_rows] = cb[k:]
        return cb[:k], cl

    def _run_phase(self, phase: int) -> LpStatus | None:
        bland = False
        degenerate = 0
        n = self.n
        while True:
            if phase == 1:
                _, _, infeas = self._infeasibility()
                if infeas == 0:
                    return None
            self.iterations += 1
            if self.iterations > self.max_iter:
                raise NumericalFailure(f"iteration limit {self.max_iter} reached")
            cs, cl = self._phase_costs(phase)
            pi = self._btran(cs, cl)
            cstruct = self.c if phase == 2 else np.zeros(n)
            d = np.concatenate([cstruct - self.GT @ pi, -pi])
            q, direction = self._choose_entering(d, bland)
            if q < 0:
                if phase == 1:
                    return LpStatus.INFEASIBLE
                return None
            step, leave, leave_to_upper = self._ratio_test(q, direction, phase, bland)
            if step is None:
                if phase == 1:
                    raise NumericalFailure("phase 1 direction without breakpoint")
                return LpStatus.UNBOUNDED
            if step <= FEAS_TOL * 1e-2:
                degenerate += 1
                if degenerate >= self.degenerate_limit:
                    bland = True
            else:
                degenerate = 0
                bland = False
            self._pivot(q, direction, step, leave, leave_to_upper)

    def _choose_entering(self, d: np.ndarray, bland: bool) -> tuple[int, int]:
        nb = ~self.is_basic
        x, lo, hi = self.x, self.lo, self.hi
        movable = nb & (lo < hi)
        can_up = movable & (x < hi - EPS)
        can_down = movable & (x > lo + EPS)
        up = can_up & (d < -OPT_TOL)
        down = can_down & (d > OPT_TOL)
        score = np.where(up | down, np.abs(d), 0.0)
        if not np.any(score > 0):
            return -1, 0
        if bland:
            q = int(np.flatnonzero(score > 0)[0])
        else:
            q = int(np.argmax(score))
        return q, (1 if up[q] else -1)

    def _entering_column(self, q: int) -> np.ndarray:
        if q < self.n:
            return self._col(q)
        a = np.zeros(self.m)
        a[q - self.n] = 1.0
        return a

    def _ratio_test(self, q: int, direction: int, phase: int, bland: bool):
        a = self._entering_column(q)
        zs, zl = self._ftran(a)
        bv = self._basic_vars()
        z = np.concatenate([zs, zl[self.logical_rows]])
        # basic values move by -direction * z per unit step
        delta = -direction * z
        xb = self.x[bv]
        lob = self.lo[bv]
        hib = self.hi[bv]
        ratios = np.full(len(bv), math.inf)
        to_upper = np.zeros(len(bv), dtype=bool)
        dec = delta < -PIVOT_TOL
        inc = delta > PIVOT_TOL
        if phase == 1:
            below = xb < lob - FEAS_TOL
            above = xb > hib + FEAS_TOL
            feas = ~below & ~above
            # feasible basics stay within bounds
            m1 = feas & dec & np.isfinite(lob)
            ratios[m1] = (xb[m1] - lob[m1]) / -delta[m1]
            m2 = feas & inc & np.isfinite(hib)
            ratios[m2] = (hib[m2] - xb[m2]) / delta[m2]
            to_upper[m2] = True
            # infeasible basics stop at the first bound they reach
            m3 = below & inc
            ratios[m3] = (lob[m3] - xb[m3]) / delta[m3]
            m4 = above & dec
            ratios[m4] = (xb[m4] - hib[m4]) / -delta[m4]
            to_upper[m4] = True
        else:
            m1 = dec & np.isfinite(lob)
            ratios[m1] = (xb[m1] - lob[m1]) / -delta[m1]
            m2 = inc & np.isfinite(hib)
            ratios[m2] = (hib[m2] - xb[m2]) / delta[m2]
            to_upper[m2] = True
        np.maximum(ratios, 0.0, out=ratios)
        flip = self.hi[q] - self.lo[q]
        best = float(ratios.min()) if len(ratios) else math.inf
        if flip <= best:
            if not math.isfinite(flip):
                return None, -1, False
            return flip, -1, False
        ties = np.flatnonzero(ratios <= best + PIVOT_TOL * 1e-2)
        if bland:
            pos = int(ties[np.argmin(bv[ties])])
        else:
            pos = int(ties[np.argmax(np.abs(z[ties]))])
        return best, pos, bool(to_upper[pos])

    def _pivot(self, q: int, direction: int, step: float, leave_pos: int, leave_to_upper: bool):
        n = self.n
        if leave_pos < 0:
            # bound flip of the entering variable
            self.x[q] = self.hi[q] if direction > 0 else self.lo[q]
            self._recompute_basics()
            return
        bv = self._basic_vars()
        p = int(bv[leave_pos])
        b = self.basis
        enter_val = self.x[q] + direction * step
        if p < n:
            spos = b.struct.index(p)
            if q < n:
                b.struct[spos] = q
            else:
                # logical q enters: its row leaves the kernel together with p
                r = q - n
                rpos = b.krows.index(r)
                b.struct.pop(spos)
                b.krows.pop(rpos)
        else:
            r_leave = p - n
            if q < n:
                b.struct.append(q)
                b.krows.append(r_leave)
            else:
                r_enter = q - n
                b.krows[b.krows.index(r_enter)] = r_leave
        self.is_basic[p] = False
        self.is_basic[q] = True
        self.x[p] = self.hi[p] if leave_to_upper else self.lo[p]
        if not math.isfinite(self.x[p]):
            self.x[p] = 0.0
        self.x[q] = enter_val
        self._refactor()
        self._recompute_basics()


def solve(lp: LinearProgram, degenerate_limit: int = 50, max_iter: int | None = None) -> LpOutcome:
    """Solve ``lp`` and classify it as optimal, infeasible or unbounded."""
    if max_iter is None:
        max_iter = 50 * (lp.num_vars + lp.num_rows) + 1000
    if lp.num_vars == 0:
        ok = all(_rel_ok(0.0, rel, b) for rel, b in zip(lp.relations, lp.rhs))
        if not ok:
            return LpOutcome(LpStatus.INFEASIBLE)
        return LpOutcome(LpStatus.OPTIMAL, 0.0, np.zeros(0), duals=np.zeros(lp.num_rows))
    outcome = _Simplex(lp, degenerate_limit, max_iter).solve()
    if outcome.status is LpStatus.OPTIMAL:
        outcome.objective = float(np.dot(lp.objective, outcome.values))
    return outcome


def _rel_ok(value: float, rel: Relation, b: float) -> bool:
    if rel is Relation.LE:
        return value <= b + FEAS_TOL
    if rel is Relation.GE:
        return value >= b - FEAS_TOL
    return abs(value - b) <= FEAS_TOL


def check_outcome(lp: LinearProgram, outcome: LpOutcome) -> list[str]:
    """List violated feasibility conditions of an optimal outcome (empty if clean)."""
    problems = []
    x = outcome.values
    if np.any(x < lp.lower - EPS) or np.any(x > lp.upper + EPS):
        problems.append("bound violated")
    act = lp.matrix @ x
    for r, (rel, b) in enumerate(zip(lp.relations, lp.rhs)):
        if not _rel_ok(act[r], rel, b):
            problems.append(f"row {r} violated: {act[r]} {rel.value} {b}")
    if abs(outcome.objective - float(np.dot(lp.objective, x))) > FEAS_TOL:
        problems.append("objective mismatch")
    return problems


def dual_rmp(instance: SppInstance, K: Sequence[int], bounded: bool) -> LinearProgram:
    """The dual restricted master: max sum(y) s.t. y(U_j) <= c_j for j in K."""
    ids = np.asarray(sorted(K), dtype=np.int64)
    m = instance.num_elements
    mat = instance.incidence[:, ids].T.tocsc()
    if bounded:
        lo, hi = np.zeros(m), np.ones(m)
    else:
        lo, hi = np.full(m, -math.inf), np.full(m, math.inf)
    return LinearProgram(Sense.MAXIMIZE, np.ones(m), mat,
                         (Relation.LE,) * len(ids), instance.costs[ids].copy(), lo, hi)


def solve_dual_rmp(instance: SppInstance, K: Sequence[int], bounded: bool) -> DualSolution:
    """Dual values of the LP relaxation restricted to ``K``.

    With ``bounded`` every dual is kept in [0, 1]; otherwise duals are free.
    An unbounded result means the restricted primal is infeasible.
    """
    lp = dual_rmp(instance, K, bounded)
    out = solve(lp)
    if out.status is not LpStatus.OPTIMAL:
        return DualSolution(np.full(instance.num_elements, math.nan), math.nan, out.status)
    y = out.values
    return DualSolution(y, float(np.sum(y)), LpStatus.OPTIMAL)


def format_lp(lp: LinearProgram) -> str:
    """CPLEX-LP text of ``lp`` for cross-checking with external solvers."""
    def term(coef, j):
        sign = "-" if coef < 0 else "+"
        return f"{sign} {abs(float(coef))!r} x{j}"

    obj = " ".join(term(v, j) for j, v in enumerate(lp.objective) if v != 0)
    out = ["Maximize" if lp.sense is Sense.MAXIMIZE else "Minimize", f" obj: {obj or '0 x0'}"]
    out.append("Subject To")
    csr = lp.matrix.tocsr()
    for r in range(lp.num_rows):
        lo, hi = csr.indptr[r], csr.indptr[r + 1]
        terms = " ".join(term(v, j) for j, v in zip(csr.indices[lo:hi], csr.data[lo:hi]))
        out.append(f" c{r}: {terms or '0 x0'} {lp.relations[r].value} {float(lp.rhs[r])!r}")
    out.append("Bounds")
    for j in range(lp.num_vars):
        lo, hi = lp.lower[j], lp.upper[j]
        if math.isinf(lo) and math.isinf(hi):
            out.append(f" x{j} free")
        else:
            lo_s = "-inf" if math.isinf(lo) else repr(float(lo))
            hi_s = "+inf" if math.isinf(hi) else repr(float(hi))
            out.append(f" {lo_s} <= x{j} <= {hi_s}")
    out.append("End")
    return "\n".join(out) + "\n"
