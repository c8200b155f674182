"""Seeded batch runs: ground truth, both methods, per-group aggregates.

Each trial gets its own 64-bit seed derived from ``(seed, group, trial)``
through :class:`numpy.random.SeedSequence`, so a trial's instance does not
depend on which other trials run or in what order. Trials may run in worker
processes; results are always merged in trial order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..cge import run_proposed
from ..colgen import Limits, RunResult, RunStatus, run_conventional
from ..core import SppInstance, is_partition
from ..exact import ExactStatus, ResourceLimit, solve_exact
from ..gtfs import (DutyConfig, GtfsError, InstanceInfeasibleWarning, build_instance,
                    enumerate_duties, parse_gtfs, select_routes)
from .config import ConfigError, ExperimentConfig
from .metrics import approximation_ratio, exact_solution_flag
from .synth import synth_instance

RUNNERS = {"conventional": run_conventional, "proposed": run_proposed}


@dataclass(frozen=True)
class TrialSpec:
    group: str
    index: int
    seed: int
    m: int | None = None
    n: int | None = None
    routes: int | None = None


@dataclass
class MethodRecord:
    status: str
    objective: float | None = None
    ar: float | None = None
    exact: bool | None = None
    iterations: int | None = None
    compression: float | None = None
    ilp_nodes: int = 0
    seconds: float = 0.0
    error: str | None = None


@dataclass
class TrialRecord:
    group: str
    index: int
    seed: int
    num_elements: int | None = None
    num_columns: int | None = None
    truth_status: str | None = None       # Optimal | NoPartition | Unverified | Failed
    truth: float | None = None
    truth_nodes: int = 0
    methods: dict[str, MethodRecord] = field(default_factory=dict)
    error: str | None = None
    seconds: float = 0.0

    @property
    def failed(self) -> bool:
        return self.error is not None or any(r.error for r in self.methods.values())


@dataclass
class MethodSummary:
    counted: int = 0               # trials entering ES and AR
    es: int = 0
    ar_mean: float | None = None
    iteration_mean: float | None = None
    compression_mean: float | None = None
    greedy_infeasible: int = 0
    limit_hit: int = 0
    failed: int = 0


@dataclass
class MetricsRow:
    group: str
    trials: int
    unverified: int
    methods: dict[str, MethodSummary]


@dataclass
class Report:
    config: ExperimentConfig
    rows: list[MetricsRow]
    trials: list[TrialRecord]

    @property
    def has_failures(self) -> bool:
        return any(t.failed for t in self.trials)


def trial_seed(base: int, group: int, index: int) -> int:
    return int(np.random.SeedSequence([base, group, index]).generate_state(1, np.uint64)[0])


def _bucket(m: int, cfg: ExperimentConfig) -> str:
    lo = cfg.m_range[0] + (m - cfg.m_range[0]) // cfg.bucket_width * cfg.bucket_width
    hi = min(lo + cfg.bucket_width - 1, cfg.m_range[1])
    return f"M{lo}-{hi}"


def plan_trials(cfg: ExperimentConfig) -> list[TrialSpec]:
    specs = []
    if cfg.source == "synthetic":
        # one group per M bucket; sizes drawn from the trial seed
        n_buckets = (cfg.m_range[1] - cfg.m_range[0]) // cfg.bucket_width + 1
        for g in range(n_buckets):
            lo = cfg.m_range[0] + g * cfg.bucket_width
            hi = min(lo + cfg.bucket_width - 1, cfg.m_range[1])
            for i in range(cfg.trials):
                s = trial_seed(cfg.seed, g, i)
                rng = np.random.Generator(np.random.PCG64(s))
                m = int(rng.integers(lo, hi + 1))
                # no instance has more distinct columns than 2^M - 1
                n_hi = min(cfg.n_range[1], 2 ** m - 1)
                n = int(rng.integers(max(m, cfg.n_range[0]), n_hi + 1))
                specs.append(TrialSpec(_bucket(m, cfg), i, s, m=m, n=n))
    else:
        for k in range(cfg.routes[0], cfg.routes[1] + 1):
            for i in range(cfg.trials):
                specs.append(TrialSpec(f"{k} routes", i, trial_seed(cfg.seed, k, i), routes=k))
    return specs


def build_trial_instance(spec: TrialSpec, cfg: ExperimentConfig) -> SppInstance:
    if cfg.source == "synthetic":
        return synth_instance(spec.m, spec.n, cfg.cost_mode, spec.seed)
    trips = select_routes(parse_gtfs(cfg.gtfs_dir, cfg.service_id), spec.routes, spec.seed)
    duty_cfg = DutyConfig(frozenset(cfg.depots), cfg.min_layover,
                          int(round(cfg.max_span_hours * 3600)), cfg.max_candidates)
    duties = enumerate_duties(trips, duty_cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InstanceInfeasibleWarning)
        return build_instance(duties, trips, cfg.cost_mode, spec.seed)


def _method_record(res: RunResult, truth: float | None) -> MethodRecord:
    rec = MethodRecord(res.status.value, res.objective, iterations=res.iterations,
                       compression=res.compression_ratio, ilp_nodes=res.ilp_nodes,
                       seconds=res.seconds)
    if res.status is RunStatus.SOLVED and truth is not None:
        rec.ar = approximation_ratio(truth, res.objective)
        rec.exact = exact_solution_flag(truth, res.objective)
    return rec


def run_trial(spec: TrialSpec, cfg: ExperimentConfig) -> TrialRecord:
    t0 = time.perf_counter()
    rec = TrialRecord(spec.group, spec.index, spec.seed)
    try:
        inst = build_trial_instance(spec, cfg)
    except (GtfsError, ValueError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        rec.seconds = time.perf_counter() - t0
        return rec
    rec.num_elements, rec.num_columns = inst.num_elements, inst.num_columns
    try:
        ex = solve_exact(inst, node_limit=cfg.truth_node_limit)
        rec.truth_nodes = ex.nodes_explored
        if ex.status is ExactStatus.OPTIMAL:
            rec.truth_status, rec.truth = "Optimal", ex.objective
        else:
            rec.truth_status = "NoPartition"
    except ResourceLimit as exc:
        rec.truth_status, rec.truth_nodes = "Unverified", exc.nodes
    except Exception as exc:       # keep the batch alive
        rec.truth_status = "Failed"
        rec.error = f"{type(exc).__name__}: {exc}"

    limits = Limits(cfg.max_iterations, cfg.time_limit, cfg.ilp_node_limit)
    for name in cfg.methods:
        try:
            res = RUNNERS[name](inst, limits)
            if res.selection is not None and not is_partition(inst, res.selection):
                raise AssertionError("returned selection is not a partition")
            rec.methods[name] = _method_record(res, rec.truth)
        except Exception as exc:
            rec.methods[name] = MethodRecord("Failed", error=f"{type(exc).__name__}: {exc}")
    rec.seconds = time.perf_counter() - t0
    return rec


def _mean(values: list[float]) -> float | None:
    return math.fsum(values) / len(values) if values else None


def aggregate(trials: list[TrialRecord], methods: tuple[str, ...]) -> list[MetricsRow]:
    groups: dict[str, list[TrialRecord]] = {}
    for t in trials:
        groups.setdefault(t.group, []).append(t)
    rows = []
    for g, ts in groups.items():
        summ = {}
        for name in methods:
            s = MethodSummary()
            ars, its, crs = [], [], []
            for t in ts:
                r = t.methods.get(name)
                if r is None or r.status == "Failed":
                    s.failed += 1
                    continue
                if r.status == RunStatus.GREEDY_INFEASIBLE.value:
                    s.greedy_infeasible += 1
                    continue
                if r.status == RunStatus.RESOURCE_LIMIT.value:
                    s.limit_hit += 1
                    continue
                its.append(r.iterations)
                crs.append(r.compression)
                if r.ar is not None:
                    s.counted += 1
                    s.es += bool(r.exact)
                    ars.append(r.ar)
            s.ar_mean, s.iteration_mean, s.compression_mean = _mean(ars), _mean(its), _mean(crs)
            summ[name] = s
        unverified = sum(t.truth_status == "Unverified" for t in ts)
        rows.append(MetricsRow(g, len(ts), unverified, summ))
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def csv_text(rows: list[MetricsRow], methods: tuple[str, ...]) -> str:
    """One line per group plus an ``average`` line over groups."""
    head = ["group", "trials", "unverified"]
    keys = ["es", "counted", "ar_mean", "iteration_mean", "compression_mean",
            "greedy_infeasible", "limit_hit", "failed"]
    for name in methods:
        head += [f"{name}_{k}" for k in keys]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head)
    for r in rows:
        line = [r.group, r.trials, r.unverified]
        for name in methods:
            s = r.methods[name]
            line += [getattr(s, k) for k in keys]
        w.writerow([_fmt(v) for v in line])
    if rows:
        line = ["average", _mean([r.trials for r in rows]), _mean([r.unverified for r in rows])]
        for name in methods:
            for k in keys:
                vals = [getattr(r.methods[name], k) for r in rows]
                line.append(_mean([v for v in vals if v is not None]))
        w.writerow([_fmt(v) for v in line])
    return buf.getvalue()


def report_json(report: Report) -> str:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in asdict(report.config).items()}
    cfg["cost_mode"] = report.config.cost_mode.value
    doc = {
        "config": cfg,
        "rows": [asdict(r) for r in report.rows],
        "trials": [asdict(t) for t in report.trials],
    }
    return json.dumps(doc, indent=1) + "\n"


def run_experiment(cfg: ExperimentConfig) -> Report:
    if cfg.source == "gtfs":
        try:
            available = len({t.route_id for t in parse_gtfs(cfg.gtfs_dir, cfg.service_id)})
        except GtfsError as exc:
            raise ConfigError(f"cannot read feed: {exc}") from None
        if cfg.routes[1] > available:
            raise ConfigError(f"routes up to {cfg.routes[1]} requested, feed has {available}")
    specs = plan_trials(cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            trials = list(pool.map(run_trial, specs, [cfg] * len(specs)))
    else:
        trials = [run_trial(s, cfg) for s in specs]
    report = Report(cfg, aggregate(trials, cfg.methods), trials)
    if cfg.output_csv is not None:
        cfg.output_csv.parent.mkdir(parents=True, exist_ok=True)
        cfg.output_csv.write_text(csv_text(report.rows, cfg.methods), encoding="utf-8")
    if cfg.output_json is not None:
        cfg.output_json.parent.mkdir(parents=True, exist_ok=True)
        cfg.output_json.write_text(report_json(report), encoding="utf-8")
    return report
