"""Set partitioning by column generation, with and without column elimination."""

from .cge import run_proposed
from .colgen import Limits, RunResult, RunStatus, run_conventional
from .core import (Column, DualSolution, LpStatus, Selection, SppError, SppInstance,
                   is_partition, objective, read_instance, reduced_costs, write_instance)
from .exact import ExactStatus, brute_force, solve_exact
from .greedy import greedy_initial
from .lp import solve_dual_rmp

__version__ = "0.1.0"

__all__ = [
    "Column", "DualSolution", "ExactStatus", "Limits", "LpStatus", "RunResult", "RunStatus",
    "Selection", "SppError", "SppInstance", "brute_force", "greedy_initial", "is_partition",
    "objective", "read_instance", "reduced_costs", "run_conventional", "run_proposed",
    "solve_dual_rmp", "solve_exact", "write_instance",
]
