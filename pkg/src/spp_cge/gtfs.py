"""Crew-scheduling instances from GTFS timetables.

Elements are bus trips; columns are duties, i.e. chains of trips one driver
can run back to back. Two trips connect when the second departs from the
stop where the first arrives, no earlier than ``min_layover`` seconds after
it. Deadheading is not modelled. A duty's span runs from the first
departure to the last arrival. When depot stops are given, a duty must start
and end at one of them.

Random choices (route sampling, random costs) use numpy's PCG64 generator
seeded with the caller's 64-bit seed, so instances are reproducible.
"""

from __future__ import annotations

import csv
import enum
import json
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import SppError, SppInstance

DEFAULT_MAX_SPAN = 9 * 3600


class GtfsError(SppError):
    pass


class MissingFile(GtfsError):
    pass


class MalformedRow(GtfsError):
    def __init__(self, filename: str, line: int, reason: str):
        super().__init__(f"{filename}:{line}: {reason}")
        self.filename = filename
        self.line = line


class TripWithoutStopTimes(GtfsError):
    pass


class NotEnoughRoutes(GtfsError):
    pass


class CandidateCapExceeded(GtfsError):
    pass


class NoDuties(GtfsError):
    pass


class InstanceInfeasibleWarning(UserWarning):
    """Some trip is not covered by any duty, so no partition exists."""


class CostMode(str, enum.Enum):
    UNIFORM = "uniform"
    RANDOM_DECILE = "random-decile"


@dataclass(frozen=True)
class Trip:
    trip_id: str
    route_id: str
    start_stop: str
    end_stop: str
    depart: int
    arrive: int


@dataclass(frozen=True)
class DutyCandidate:
    trips: tuple[str, ...]
    span: int


@dataclass(frozen=True)
class DutyConfig:
    depot_stops: frozenset[str] = field(default_factory=frozenset)
    min_layover: int = 0
    max_span: int = DEFAULT_MAX_SPAN
    max_candidates: int = 1_000_000

    def __post_init__(self):
        object.__setattr__(self, "depot_stops", frozenset(self.depot_stops))
        if self.max_span <= 0 or self.max_candidates <= 0 or self.min_layover < 0:
            raise ValueError("max_span and max_candidates must be positive, "
                             "min_layover non-negative")


def parse_time(text: str) -> int:
    """``H:MM:SS`` to seconds after service-day midnight; hours may exceed 23."""
    h, m, s = text.strip().split(":")
    h, m, s = int(h), int(m), int(s)
    if h < 0 or not 0 <= m < 60 or not 0 <= s < 60:
        raise ValueError(f"bad time {text!r}")
    return h * 3600 + m * 60 + s


def _read_table(directory: Path, name: str, required: Sequence[str]):
    path = directory / name
    if not path.is_file():
        raise MissingFile(f"{path} not found")
    with path.open(encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MalformedRow(name, 1, "missing header row") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise MalformedRow(name, 1, f"missing column(s) {', '.join(missing)}")
        pos = {c: header.index(c) for c in header}
        for row in reader:
            if not row or all(not v.strip() for v in row):
                continue
            if len(row) != len(header):
                raise MalformedRow(name, reader.line_num,
                                   f"expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, {c: row[i].strip() for c, i in pos.items()}


def parse_gtfs(directory: str | Path, service_id: str | None = None) -> list[Trip]:
    """Read trips with their first/last stop times, sorted by departure then id."""
    directory = Path(directory)
    for name in ("routes.txt", "trips.txt", "stop_times.txt"):
        if not (directory / name).is_file():
            raise MissingFile(f"{directory / name} not found")
    routes = {r["route_id"] for _, r in _read_table(directory, "routes.txt", ["route_id"])}
    trip_route: dict[str, str] = {}
    for line, r in _read_table(directory, "trips.txt", ["route_id", "trip_id"]):
        if r["route_id"] not in routes:
            raise MalformedRow("trips.txt", line, f"unknown route_id {r['route_id']!r}")
        if service_id is not None and r.get("service_id") != service_id:
            continue
        trip_route[r["trip_id"]] = r["route_id"]

    first: dict[str, tuple[int, str, int]] = {}
    last: dict[str, tuple[int, str, int]] = {}
    cols = ["trip_id", "arrival_time", "departure_time", "stop_id", "stop_sequence"]
    for line, r in _read_table(directory, "stop_times.txt", cols):
        tid = r["trip_id"]
        if tid not in trip_route:
            continue
        try:
            seq = int(r["stop_sequence"])
            dep = parse_time(r["departure_time"]) if r["departure_time"] else None
            arr = parse_time(r["arrival_time"]) if r["arrival_time"] else None
        except ValueError as exc:
            raise MalformedRow("stop_times.txt", line, str(exc)) from None
        if tid not in first or seq < first[tid][0]:
            if dep is None and arr is None:
                raise MalformedRow("stop_times.txt", line, "no time at first stop")
            first[tid] = (seq, r["stop_id"], dep if dep is not None else arr)
        if tid not in last or seq > last[tid][0]:
            if arr is None and dep is None:
                raise MalformedRow("stop_times.txt", line, "no time at last stop")
            last[tid] = (seq, r["stop_id"], arr if arr is not None else dep)

    trips = []
    for tid, route in trip_route.items():
        if tid not in first:
            raise TripWithoutStopTimes(tid)
        _, s0, t0 = first[tid]
        _, s1, t1 = last[tid]
        if t1 <= t0:
            raise GtfsError(f"trip {tid} arrives at or before it departs")
        trips.append(Trip(tid, route, s0, s1, t0, t1))
    trips.sort(key=lambda t: (t.depart, t.trip_id))
    return trips


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def select_routes(trips: Sequence[Trip], k: int, seed: int) -> list[Trip]:
    """All trips of ``k`` routes drawn uniformly without replacement."""
    routes = sorted({t.route_id for t in trips})
    if k > len(routes) or k < 1:
        raise NotEnoughRoutes(f"asked for {k} routes, feed has {len(routes)}")
    picked = {routes[i] for i in make_rng(seed).choice(len(routes), size=k, replace=False)}
    return [t for t in trips if t.route_id in picked]


def enumerate_duties(trips: Sequence[Trip], config: DutyConfig = DutyConfig()) -> list[DutyCandidate]:
    """Every feasible chain of trips (maximal or not), sorted by trip-id sequence.

    Raises :class:`CandidateCapExceeded` rather than returning a truncated list.
    """
    if not trips:
        raise ValueError("no trips given")
    ordered = sorted(trips, key=lambda t: (t.depart, t.trip_id))
    if len({t.trip_id for t in ordered}) != len(ordered):
        raise ValueError("duplicate trip ids")
    by_stop: dict[str, list[int]] = defaultdict(list)
    for idx, t in enumerate(ordered):
        by_stop[t.start_stop].append(idx)
    succ = []
    for t in ordered:
        ready = t.arrive + config.min_layover
        succ.append([j for j in by_stop.get(t.end_stop, ()) if ordered[j].depart >= ready])
    depots = config.depot_stops

    out: list[tuple[str, ...]] = []

    def emit(path: list[int]):
        if len(out) >= config.max_candidates:
            raise CandidateCapExceeded(f"more than {config.max_candidates} duties")
        out.append(tuple(ordered[i].trip_id for i in path))

    for s, start in enumerate(ordered):
        if depots and start.start_stop not in depots:
            continue
        if start.arrive - start.depart > config.max_span:
            continue
        limit = start.depart + config.max_span
        stack = [[s]]
        while stack:
            path = stack.pop()
            last = ordered[path[-1]]
            if not depots or last.end_stop in depots:
                emit(path)
            for j in reversed(succ[path[-1]]):
                if ordered[j].arrive <= limit:
                    stack.append(path + [j])

    index = {t.trip_id: t for t in ordered}
    out.sort()
    return [DutyCandidate(d, index[d[-1]].arrive - index[d[0]].depart) for d in out]


def check_duty(duty: DutyCandidate, trips: Iterable[Trip], config: DutyConfig) -> list[str]:
    """Independent feasibility check of one duty; returns the broken rules."""
    index = {t.trip_id: t for t in trips}
    seq = [index[t] for t in duty.trips]
    problems = []
    for a, b in zip(seq, seq[1:]):
        if a.end_stop != b.start_stop:
            problems.append(f"{a.trip_id}->{b.trip_id}: stops do not connect")
        if b.depart < a.arrive + config.min_layover:
            problems.append(f"{a.trip_id}->{b.trip_id}: layover too short")
    span = seq[-1].arrive - seq[0].depart
    if span != duty.span:
        problems.append("recorded span is wrong")
    if span > config.max_span:
        problems.append("span exceeds limit")
    if config.depot_stops and (seq[0].start_stop not in config.depot_stops
                               or seq[-1].end_stop not in config.depot_stops):
        problems.append("does not start and end at a depot")
    return problems


def build_instance(duties: Sequence[DutyCandidate], trips: Sequence[Trip],
                   cost_mode: CostMode | str = CostMode.UNIFORM, seed: int = 0) -> SppInstance:
    """Rows are ``trips`` in the given order, columns are ``duties`` in order.

    ``random-decile`` draws each cost uniformly from {0.1, 0.2, ..., 1.0}.
    """
    if not duties:
        raise NoDuties("no duty candidates")
    cost_mode = CostMode(cost_mode)
    row_of = {t.trip_id: i for i, t in enumerate(trips)}
    if cost_mode is CostMode.UNIFORM:
        costs = [1.0] * len(duties)
    else:
        costs = (make_rng(seed).integers(1, 11, size=len(duties)) / 10).tolist()
    pairs = [([row_of[t] for t in d.trips], c) for d, c in zip(duties, costs)]
    inst = SppInstance.from_pairs(len(trips), pairs)
    covered = {r for rows, _ in pairs for r in rows}
    if len(covered) < len(trips):
        warnings.warn(f"{len(trips) - len(covered)} trip(s) lie on no duty",
                      InstanceInfeasibleWarning, stacklevel=2)
    return inst


def duty_manifest(duties: Sequence[DutyCandidate], trips: Sequence[Trip]) -> str:
    """JSON audit record: trip order (row ``i`` is ``trips[i - 1]``) and, for
    each column id, the trips of its duty."""
    doc = {
        "trips": [t.trip_id for t in trips],
        "duties": [{"id": j, "trips": list(d.trips), "span": d.span}
                   for j, d in enumerate(duties)],
    }
    return json.dumps(doc, indent=1) + "\n"
