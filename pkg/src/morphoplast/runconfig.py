"""Declarative run configuration: a small key=value text format.

A config file is plain text: one ``key = value`` pair per line, ``#``
comments and blank lines ignored.  Lists are comma-separated; seed ranges
may be written ``lo..hi`` (inclusive).  Example::

    # sweep the competent pool on the extended grid
    kind = sweep
    env = cartpole
    pool_file = out/pool/networks.jsonl
    grid = extended248
    seeds = 42..61
    out_dir = out/sweep_extended

Unknown keys are rejected, and ``validate`` checks kind-specific
requirements before any work starts.  ``config_hash`` fingerprints the
fully-resolved configuration for provenance headers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .analysis import GRID_NAMES
from .envs import VALID_CHANGES
from .evaluation import DEFAULT_SEEDS, MODES

EXPERIMENT_KINDS = (
    "pool",
    "sweep",
    "nonstationary",
    "off_on",
    "dose_response",
    "coevolve",
    "random_control",
    "report",
)
REPORT_KINDS = (
    "strata",
    "table1",
    "heatmap",
    "premium",
    "survival",
    "dose",
    "eta_trajectory",
    "control_comparison",
)

_GRID_DEFAULTS = {"cartpole": 10, "acrobot": 20}


@dataclass(frozen=True)
class RunConfig:
    kind: str
    env: str = "cartpole"
    width: int | None = None  # defaults to the per-env grid edge
    height: int | None = None
    iterations: int = 200
    count: int | None = None  # pool: genomes to draw
    pool_file: str | None = None  # networks JSONL from a pool run
    grid: str | None = None  # sweep grid name
    mode: str = "plastic"
    change: str | None = None  # perturbation name
    switch_step: int | None = None
    switch_steps: tuple[int, ...] = (100, 200, 300, 400)
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    seed: int = 0  # master seed: pool sampling, GA, control generation
    out_dir: str | None = None
    condition: str | None = None  # GA condition: A, B, or C
    runs: int = 1
    generations: int = 200
    replicates: int = 5
    strict_roles: bool = True  # controls: match per-role counts
    report: str | None = None
    records: tuple[str, ...] = ()

    def resolved(self) -> "RunConfig":
        """Fill in env-dependent defaults (grid edge lengths)."""
        edge = _GRID_DEFAULTS[self.env]
        return replace(
            self,
            width=self.width if self.width is not None else edge,
            height=self.height if self.height is not None else edge,
        )

    def to_items(self) -> list[tuple[str, str]]:
        """Canonical (key, value) rendering of every non-default-None field."""
        out = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, tuple):
                rendered = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                rendered = "true" if value else "false"
            else:
                rendered = str(value)
            out.append((f.name, rendered))
        return out


def config_hash(config: RunConfig) -> str:
    text = "\n".join(f"{k}={v}" for k, v in config.resolved().to_items())
    return hashlib.sha256(text.encode()).hexdigest()[:16]


_INT_FIELDS = {"width", "height", "iterations", "count", "switch_step", "seed", "runs", "generations", "replicates"}
_INT_TUPLE_FIELDS = {"switch_steps", "seeds"}
_STR_TUPLE_FIELDS = {"records"}
_BOOL_FIELDS = {"strict_roles"}


def _parse_int_list(raw: str) -> tuple[int, ...]:
    parts = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if ".." in chunk:
            lo, hi = chunk.split("..")
            parts.extend(range(int(lo), int(hi) + 1))
        elif chunk:
            parts.append(int(chunk))
    return tuple(parts)


def parse_config_text(text: str) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in known:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        if key in _INT_FIELDS:
            values[key] = int(raw)
        elif key in _INT_TUPLE_FIELDS:
            values[key] = _parse_int_list(raw)
        elif key in _STR_TUPLE_FIELDS:
            values[key] = tuple(s.strip() for s in raw.split(",") if s.strip())
        elif key in _BOOL_FIELDS:
            if raw.lower() not in ("true", "false"):
                raise ValueError(f"line {lineno}: {key} must be true or false")
            values[key] = raw.lower() == "true"
        else:
            values[key] = raw
    if "kind" not in values:
        raise ValueError("config is missing the required 'kind' key")
    return RunConfig(**values)


def parse_config_file(path) -> RunConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def validate(config: RunConfig) -> RunConfig:
    """Check kind-specific requirements; returns the resolved config."""
    c = config.resolved()
    problems = []
    if c.kind not in EXPERIMENT_KINDS:
        problems.append(f"kind must be one of {EXPERIMENT_KINDS}, got {c.kind!r}")
    if c.env not in _GRID_DEFAULTS:
        problems.append(f"env must be one of {tuple(_GRID_DEFAULTS)}, got {c.env!r}")
    if c.width is not None and c.width < 2 or c.height is not None and c.height < 2:
        problems.append("grid edges must be >= 2")
    if c.iterations < 1:
        problems.append("iterations must be >= 1")
    if not c.seeds:
        problems.append("seeds must be non-empty")

    needs_pool = c.kind in ("sweep", "nonstationary", "off_on", "dose_response", "random_control")
    if c.kind == "pool":
        if c.count is None or c.count < 0:
            problems.append("pool requires count >= 0")
    if needs_pool:
        if not c.pool_file:
            problems.append(f"{c.kind} requires pool_file")
        elif not Path(c.pool_file).exists():
            problems.append(f"pool_file not found: {c.pool_file}")
    if c.kind in ("sweep", "nonstationary", "off_on", "dose_response"):
        grid = c.grid or ("coarse22" if c.kind in ("off_on", "dose_response") else None)
        if grid is None:
            problems.append(f"{c.kind} requires grid")
        elif grid not in GRID_NAMES:
            problems.append(f"grid must be one of {GRID_NAMES}, got {grid!r}")
        c = replace(c, grid=grid)
    if c.kind in ("nonstationary", "off_on", "dose_response"):
        valid = VALID_CHANGES.get(c.env, ())
        if c.change not in valid:
            problems.append(f"{c.kind} on {c.env} requires change in {valid}")
    if c.kind in ("nonstationary", "off_on") and c.switch_step is None:
        problems.append(f"{c.kind} requires switch_step")
    if c.kind == "dose_response" and not c.switch_steps:
        problems.append("dose_response requires switch_steps")
    if c.kind == "coevolve":
        if c.condition not in ("A", "B", "C"):
            problems.append("coevolve requires condition A, B, or C")
        if c.runs < 1 or c.generations < 1:
            problems.append("coevolve requires runs >= 1 and generations >= 1")
    if c.kind == "random_control" and c.replicates < 1:
        problems.append("random_control requires replicates >= 1")
    if c.kind == "report":
        if c.report not in REPORT_KINDS:
            problems.append(f"report must be one of {REPORT_KINDS}, got {c.report!r}")
        if not c.records:
            problems.append("report requires records (comma-separated result files)")
        else:
            for rec in c.records:
                if not Path(rec).exists():
                    problems.append(f"records file not found: {rec}")
    if c.mode not in MODES:
        problems.append(f"mode must be one of {MODES}, got {c.mode!r}")

    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))
    return c
