"""Synthetic crew-scheduling-like instances with a planted partition.

Elements are trips on a small network of stops. The planted partition is a
set of blocks, each a chain of consecutive trips run by one vehicle. The
remaining columns are random walks through the connection graph (trip ``b``
may follow ``a`` when it leaves from ``a``'s arrival stop at or after ``a``
arrives), together with every contiguous piece of each walk, so the pool
looks like an enumeration of duties rather than unrelated random subsets.
If the chain pool runs dry before ``N`` columns exist, distinct random
subsets fill the rest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import SppInstance
from ..gtfs import CostMode, make_rng


@dataclass(frozen=True)
class SynthParams:
    stops: int = 5
    block_min: int = 2
    block_max: int = 6
    walk_max: int = 8
    max_span: int = 540          # minutes
    trip_minutes: tuple[int, int] = (30, 90)
    layover_minutes: tuple[int, int] = (5, 30)
    first_departure: tuple[int, int] = (300, 900)

    def __post_init__(self):
        if self.stops < 2:
            raise ValueError("need at least two stops")
        if not 1 <= self.block_min <= self.block_max:
            raise ValueError("block sizes must satisfy 1 <= block_min <= block_max")
        if self.walk_max < 1 or self.max_span <= 0:
            raise ValueError("walk_max and max_span must be positive")


@dataclass(frozen=True)
class SynthInstance:
    instance: SppInstance
    planted: tuple[int, ...]     # column ids of the hidden partition


def _trips(m: int, p: SynthParams, rng: np.random.Generator):
    trips: list[tuple[int, int, int, int]] = []   # (from, to, depart, arrive)
    blocks: list[list[int]] = []
    while len(trips) < m:
        size = min(int(rng.integers(p.block_min, p.block_max + 1)), m - len(trips))
        stop = int(rng.integers(p.stops))
        t = int(rng.integers(p.first_departure[0], p.first_departure[1] + 1))
        block = []
        for _ in range(size):
            nxt = int(rng.integers(p.stops - 1))
            nxt += nxt >= stop
            dur = int(rng.integers(p.trip_minutes[0], p.trip_minutes[1] + 1))
            trips.append((stop, nxt, t, t + dur))
            block.append(len(trips) - 1)
            t += dur + int(rng.integers(p.layover_minutes[0], p.layover_minutes[1] + 1))
            stop = nxt
        blocks.append(block)
    return trips, blocks


def synth_with_plant(m: int, n: int, cost_mode: CostMode | str = CostMode.UNIFORM,
                     seed: int = 0, params: SynthParams = SynthParams()) -> SynthInstance:
    if m < 1 or n < m:
        raise ValueError(f"need 1 <= M <= N, got M={m}, N={n}")
    if m < 63 and n > 2 ** m - 1:
        raise ValueError(f"only {2 ** m - 1} distinct columns exist over {m} elements")
    cost_mode = CostMode(cost_mode)
    rng = make_rng(seed)
    trips, blocks = _trips(m, params, rng)
    succ = [[j for j in range(m) if trips[j][0] == a[1] and trips[j][2] >= a[3]] for a in trips]

    cols: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()

    def add(rows: tuple[int, ...]):
        if rows not in seen and len(cols) < n:
            seen.add(rows)
            cols.append(rows)

    def add_pieces(chain: list[int]):
        for a in range(len(chain)):
            for b in range(a + 1, len(chain) + 1):
                add(tuple(sorted(chain[a:b])))

    for block in blocks:
        add(tuple(block))
    planted_rows = list(cols)
    for block in blocks:
        add_pieces(block)

    tries = 0
    while len(cols) < n and tries < 20 * n:
        tries += 1
        chain = [int(rng.integers(m))]
        length = int(rng.integers(1, params.walk_max + 1))
        while len(chain) < length:
            start = trips[chain[0]][2]
            nxt = [j for j in succ[chain[-1]] if trips[j][3] - start <= params.max_span]
            if not nxt:
                break
            chain.append(int(rng.choice(nxt)))
        add_pieces(chain)
    while len(cols) < n:
        size = int(rng.integers(1, m + 1))
        add(tuple(sorted(rng.choice(m, size=size, replace=False).tolist())))

    order = rng.permutation(n)
    cols = [cols[i] for i in order]
    if cost_mode is CostMode.UNIFORM:
        costs = [1.0] * n
    else:
        costs = (rng.integers(1, 11, size=n) / 10).tolist()
    where = {rows: j for j, rows in enumerate(cols)}
    planted = tuple(sorted(where[r] for r in planted_rows))
    return SynthInstance(SppInstance.from_pairs(m, list(zip(cols, costs))), planted)


def synth_instance(m: int, n: int, cost_mode: CostMode | str = CostMode.UNIFORM,
                   seed: int = 0, params: SynthParams = SynthParams()) -> SppInstance:
    """Instance with ``m`` elements and ``n`` distinct columns; same seed, same instance."""
    return synth_with_plant(m, n, cost_mode, seed, params).instance
