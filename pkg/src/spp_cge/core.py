"""Set partitioning data model.

An instance is a universe of ``num_elements`` elements (0-based internally,
1-based in the text format) and an ordered pool of columns, each a non-empty
subset of the universe with a strictly positive cost.
"""

from __future__ import annotations

import decimal
import enum
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

EPS = 1e-9


class SppError(Exception):
    """Base class for instance and solver errors."""


class InvalidInstance(SppError):
    pass


class EmptyColumn(InvalidInstance):
    pass


class NonPositiveCost(InvalidInstance):
    pass


class RowOutOfRange(InvalidInstance):
    pass


class DuplicateColumnId(InvalidInstance):
    pass


class UnknownColumnId(SppError):
    pass


class DimensionMismatch(SppError):
    pass


class FormatError(SppError):
    pass


@dataclass(frozen=True)
class Column:
    id: int
    rows: tuple[int, ...]
    cost: float

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(sorted(set(self.rows))))
        object.__setattr__(self, "cost", float(self.cost))


@dataclass(frozen=True, eq=False)
class SppInstance:
    num_elements: int
    columns: tuple[Column, ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))

    @classmethod
    def from_pairs(cls, num_elements: int, pairs: Iterable[tuple[Iterable[int], float]],
                   one_based: bool = False) -> "SppInstance":
        """Build an instance from ``(rows, cost)`` pairs; ids follow input order."""
        shift = 1 if one_based else 0
        cols = [Column(j, tuple(r - shift for r in rows), cost)
                for j, (rows, cost) in enumerate(pairs)]
        return cls(num_elements, tuple(cols))

    @property
    def num_columns(self) -> int:
        return len(self.columns)

    @cached_property
    def costs(self) -> np.ndarray:
        return np.array([c.cost for c in self.columns], dtype=float)

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.array([len(c.rows) for c in self.columns], dtype=np.int64)

    @cached_property
    def incidence(self) -> sparse.csc_matrix:
        """The 0/1 matrix A (elements x columns) in CSC form."""
        indptr = np.zeros(self.num_columns + 1, dtype=np.int64)
        np.cumsum(self.sizes, out=indptr[1:])
        indices = np.fromiter((r for c in self.columns for r in c.rows),
                              dtype=np.int64, count=int(indptr[-1]))
        data = np.ones(len(indices))
        return sparse.csc_matrix((data, indices, indptr),
                                 shape=(self.num_elements, self.num_columns))

    def column(self, j: int) -> Column:
        if not 0 <= j < self.num_columns:
            raise UnknownColumnId(j)
        return self.columns[j]

    def with_costs(self, costs: Sequence[float]) -> "SppInstance":
        cols = tuple(Column(c.id, c.rows, float(v)) for c, v in zip(self.columns, costs))
        return SppInstance(self.num_elements, cols)

    def __eq__(self, other):
        if not isinstance(other, SppInstance):
            return NotImplemented
        return self.num_elements == other.num_elements and self.columns == other.columns

    def __hash__(self):
        return hash((self.num_elements, self.columns))


@dataclass(frozen=True)
class Selection:
    chosen: frozenset[int]
    objective: float

    def sorted_ids(self) -> list[int]:
        return sorted(self.chosen)


class LpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class DualSolution:
    values: np.ndarray
    objective: float
    status: LpStatus = LpStatus.OPTIMAL


def validate_instance(instance: SppInstance) -> None:
    """Raise an :class:`InvalidInstance` subclass unless every invariant holds."""
    m = instance.num_elements
    if m <= 0:
        raise InvalidInstance(f"num_elements must be positive, got {m}")
    for pos, col in enumerate(instance.columns):
        if col.id != pos:
            raise DuplicateColumnId(f"column at position {pos} has id {col.id}")
        if not col.rows:
            raise EmptyColumn(f"column {col.id} covers no element")
        if not col.cost > 0:
            raise NonPositiveCost(f"column {col.id} has cost {col.cost}")
        if col.rows[0] < 0 or col.rows[-1] >= m:
            raise RowOutOfRange(f"column {col.id} has a row outside 1..{m}")


def _check_ids(instance: SppInstance, ids: Iterable[int]) -> list[int]:
    ids = sorted(ids)
    n = instance.num_columns
    for j in ids:
        if not 0 <= j < n:
            raise UnknownColumnId(j)
    return ids


def exact_sum(values: Iterable[float]) -> float:
    """Sum floats as the decimals they print as, rounded once at the end.

    Two selections whose costs add up to the same decimal total therefore get
    bit-identical objectives (0.1 + 0.2 and 0.3 both give 0.3).
    """
    with decimal.localcontext() as ctx:
        ctx.prec = 80
        total = sum((decimal.Decimal(repr(float(v))) for v in values), decimal.Decimal(0))
        return float(total)


def objective(instance: SppInstance, selection: Selection | Iterable[int]) -> float:
    ids = selection.chosen if isinstance(selection, Selection) else selection
    ids = _check_ids(instance, ids)
    return exact_sum(instance.columns[j].cost for j in ids)


def make_selection(instance: SppInstance, ids: Iterable[int]) -> Selection:
    ids = frozenset(_check_ids(instance, ids))
    return Selection(ids, objective(instance, ids))


def is_partition(instance: SppInstance, selection: Selection | Iterable[int]) -> bool:
    ids = selection.chosen if isinstance(selection, Selection) else selection
    ids = _check_ids(instance, ids)
    covered = np.zeros(instance.num_elements, dtype=bool)
    for j in ids:
        rows = list(instance.columns[j].rows)
        if covered[rows].any():
            return False
        covered[rows] = True
    return bool(covered.all())


def reduced_cost(column: Column, duals: DualSolution | np.ndarray) -> float:
    y = duals.values if isinstance(duals, DualSolution) else np.asarray(duals)
    if column.rows and column.rows[-1] >= len(y):
        raise DimensionMismatch(f"column {column.id} references row {column.rows[-1] + 1} "
                                f"but only {len(y)} duals were given")
    return column.cost - float(sum(y[i] for i in column.rows))


def reduced_costs(instance: SppInstance, duals: DualSolution | np.ndarray) -> np.ndarray:
    """Vectorised reduced costs of every column in the pool."""
    y = duals.values if isinstance(duals, DualSolution) else np.asarray(duals, dtype=float)
    if len(y) != instance.num_elements:
        raise DimensionMismatch(f"expected {instance.num_elements} duals, got {len(y)}")
    return instance.costs - instance.incidence.T @ y


def normalize_costs(instance: SppInstance) -> tuple[SppInstance, float]:
    """Divide every cost by the largest one so that all costs lie in (0, 1]."""
    validate_instance(instance)
    scale = float(instance.costs.max())
    if scale <= 1.0:
        return instance, 1.0
    return instance.with_costs(instance.costs / scale), scale


# --- text format -----------------------------------------------------------
#
#   M N
#   cost k i_1 ... i_k      (N lines, rows 1-based)
#
# Blank lines and lines starting with '#' are ignored.

def format_instance(instance: SppInstance) -> str:
    lines = [f"{instance.num_elements} {instance.num_columns}"]
    for col in instance.columns:
        rows = " ".join(str(r + 1) for r in col.rows)
        lines.append(f"{col.cost!r} {len(col.rows)} {rows}")
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> SppInstance:
    lines = [ln.split() for ln in text.splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise FormatError("empty instance file")
    try:
        m, n = (int(t) for t in lines[0])
    except ValueError as exc:
        raise FormatError(f"bad header line: {' '.join(lines[0])!r}") from exc
    if len(lines) - 1 != n:
        raise FormatError(f"header announces {n} columns, found {len(lines) - 1}")
    pairs = []
    for lineno, toks in enumerate(lines[1:], start=2):
        try:
            cost = float(toks[0])
            k = int(toks[1])
            rows = [int(t) for t in toks[2:]]
        except (ValueError, IndexError) as exc:
            raise FormatError(f"column line {lineno}: {' '.join(toks)!r}") from exc
        if k != len(rows):
            raise FormatError(f"column line {lineno}: count {k} but {len(rows)} rows")
        pairs.append((rows, cost))
    inst = SppInstance.from_pairs(m, pairs, one_based=True)
    validate_instance(inst)
    return inst


def read_instance(path: str | Path) -> SppInstance:
    return parse_instance(Path(path).read_text(encoding="utf-8"))


def write_instance(instance: SppInstance, path: str | Path) -> None:
    Path(path).write_text(format_instance(instance), encoding="utf-8")
