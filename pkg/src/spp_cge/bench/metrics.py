"""Quality measures against a proven optimum."""

from __future__ import annotations

from ..core import SppError

MATCH_TOL = 1e-7


class OracleViolation(SppError):
    """A solver reported an objective below the proven optimum."""


def _check(true_opt: float, obtained: float) -> float:
    if not true_opt > 0:
        raise ValueError(f"optimum must be positive, got {true_opt}")
    gap = obtained - true_opt
    if gap < -MATCH_TOL:
        raise OracleViolation(f"objective {obtained!r} is below the optimum {true_opt!r}")
    return gap


def approximation_ratio(true_opt: float, obtained: float) -> float:
    gap = _check(true_opt, obtained)
    return 0.0 if abs(gap) <= MATCH_TOL else gap / true_opt


def exact_solution_flag(true_opt: float, obtained: float) -> bool:
    return abs(_check(true_opt, obtained)) <= MATCH_TOL
