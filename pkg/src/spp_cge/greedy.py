"""Greedy construction of the initial column set."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .core import Selection, SppInstance, make_selection


def greedy_initial(instance: SppInstance) -> Selection:
    """Repeatedly take the column with the largest ``#U_j / c_j`` among the
    columns disjoint from everything chosen so far.

    Costs are compared as the decimals they print as, so 3 / 0.3 and 2 / 0.2
    tie exactly. Ties go to the lowest column id. The result is pairwise disjoint but need
    not cover every element; check it with :func:`is_partition`.
    """
    covered = np.zeros(instance.num_elements, dtype=bool)
    chosen: list[int] = []
    cols = instance.columns
    # columns only ever drop out of the candidate list
    cand = list(range(instance.num_columns))
    exact_cost = [Fraction(repr(c.cost)) for c in cols]
    while True:
        best = -1
        best_size = 0
        best_cost = Fraction(1)
        still = []
        for j in cand:
            col = cols[j]
            if covered[list(col.rows)].any():
                continue
            still.append(j)
            size = len(col.rows)
            # size/cost > best_size/best_cost, compared without division
            cost = exact_cost[j]
            if best < 0 or size * best_cost > best_size * cost:
                best, best_size, best_cost = j, size, cost
        if best < 0:
            break
        chosen.append(best)
        covered[list(cols[best].rows)] = True
        cand = [j for j in still if j != best]
    return make_selection(instance, chosen)
