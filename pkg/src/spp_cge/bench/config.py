"""Experiment configuration: a flat ``key = value`` text file.

Blank lines and lines starting with ``#`` are ignored. Keys are listed in
:data:`KEYS` with their defaults; an unknown key or a bad value raises
:class:`ConfigError`. Relative paths are taken from the config file's folder.

Example::

    source = synthetic
    cost_mode = uniform
    methods = conventional, proposed
    seed = 7
    trials = 10
    m_range = 20, 60
    n_range = 300, 3000
    output_csv = results.csv
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from ..core import SppError
from ..gtfs import CostMode

METHODS = ("conventional", "proposed")


class ConfigError(SppError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    source: str = "synthetic"                 # synthetic | gtfs
    cost_mode: CostMode = CostMode.UNIFORM
    methods: tuple[str, ...] = METHODS
    seed: int = 0
    trials: int = 10                          # per group
    # synthetic source
    m_range: tuple[int, int] = (20, 60)
    n_range: tuple[int, int] = (300, 3000)
    bucket_width: int = 10                    # groups are M buckets of this width
    # gtfs source
    gtfs_dir: Path | None = None
    service_id: str | None = None
    routes: tuple[int, int] = (2, 6)
    depots: tuple[str, ...] = ()
    max_span_hours: float = 9.0
    min_layover: int = 0                      # seconds
    max_candidates: int = 1_000_000
    # limits
    truth_node_limit: int | None = 200_000
    ilp_node_limit: int | None = None
    max_iterations: int | None = None
    time_limit: float | None = None
    workers: int = 1
    # outputs
    output_csv: Path | None = None
    output_json: Path | None = None

    def __post_init__(self):
        if self.source not in ("synthetic", "gtfs"):
            raise ConfigError(f"source must be synthetic or gtfs, not {self.source!r}")
        try:
            object.__setattr__(self, "cost_mode", CostMode(self.cost_mode))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for name in ("gtfs_dir", "output_csv", "output_json"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, Path(value))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "depots", tuple(self.depots))
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise ConfigError(f"methods must be a non-empty subset of {METHODS}")
        lo, hi = self.m_range
        if not 1 <= lo <= hi:
            raise ConfigError("m_range needs 1 <= low <= high")
        if not self.n_range[0] <= self.n_range[1] or self.n_range[1] < hi:
            raise ConfigError("n_range needs low <= high and high >= largest M")
        if self.source == "synthetic" and 2 ** lo - 1 < self.n_range[0]:
            raise ConfigError(f"M={lo} allows at most {2 ** lo - 1} distinct columns, "
                              f"fewer than n_range low {self.n_range[0]}")
        if self.bucket_width < 1 or self.workers < 1:
            raise ConfigError("bucket_width and workers must be positive")
        if self.source == "gtfs":
            if self.gtfs_dir is None:
                raise ConfigError("gtfs source needs gtfs_dir")
            if not 1 <= self.routes[0] <= self.routes[1]:
                raise ConfigError("routes needs 1 <= low <= high")
            if self.max_span_hours <= 0:
                raise ConfigError("max_span_hours must be positive")


def _int_pair(text: str) -> tuple[int, int]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) == 1:
        parts *= 2
    if len(parts) != 2:
        raise ValueError("expected one or two integers")
    return int(parts[0]), int(parts[1])


def _opt(conv):
    def parse(text: str):
        return None if text.lower() in ("", "none") else conv(text)
    return parse


def _names(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


_PARSERS = {
    "source": str,
    "cost_mode": CostMode,
    "methods": _names,
    "seed": int,
    "trials": int,
    "m_range": _int_pair,
    "n_range": _int_pair,
    "bucket_width": int,
    "gtfs_dir": Path,
    "service_id": _opt(str),
    "routes": _int_pair,
    "depots": _names,
    "max_span_hours": float,
    "min_layover": int,
    "max_candidates": int,
    "truth_node_limit": _opt(int),
    "ilp_node_limit": _opt(int),
    "max_iterations": _opt(int),
    "time_limit": _opt(float),
    "workers": int,
    "output_csv": Path,
    "output_json": Path,
}
KEYS = {f.name: f.default for f in fields(ExperimentConfig) if f.name in _PARSERS}


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: {key!r} given twice")
        try:
            values[key] = _PARSERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    if base_dir is not None:
        for key in ("gtfs_dir", "output_csv", "output_json"):
            if key in values and not values[key].is_absolute():
                values[key] = base_dir / values[key]
    return ExperimentConfig(**values)


def read_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, path.parent)
