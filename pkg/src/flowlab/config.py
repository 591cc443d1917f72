"""Experiment configuration: a YAML mapping validated into ``ExperimentConfig``.

Schema (all keys except ``scenario`` optional)::

    scenario: existence            # one of SCENARIOS
    seed: 0
    output_dir: out/existence
    grid: {dim: 2, resolution: [64, 64], periods: [2pi, 2pi], order: 8}
    background: {family: conformal, amplitude: 0.17, mode: static, lambda_max: 10}
    T: 0.05
    dt: null                       # null -> CFL step 0.2 dx^2 / (2n)
    epsilon_ladder: [0.001, 0.01]
    delta: 0.1
    tol: null                      # null -> 1e-10 * delta
    max_iter: 50
    pieces: 1
    norm: {stride: 1}
    dump: {fields: true, every: 10}
    params: {...}                  # scenario-specific, see README
    pass_criteria:                 # metric -> {max: x} | {min: x} | {equals: x}
      cross_solver_gap: {max: 1.0e-4}

Periods accept numbers or strings such as ``2pi`` / ``pi`` / ``1.5``.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigurationError
from .families import FAMILIES
from .grid import DEFAULT_ORDER, build_grid

SCENARIOS = (
    "identity",
    "kernel",
    "norms",
    "existence",
    "contraction",
    "continuous-dependence",
    "chained-dependence",
    "pullback",
)

_KNOWN = {
    "scenario", "seed", "output_dir", "grid", "background", "T", "dt", "epsilon_ladder",
    "delta", "tol", "max_iter", "pieces", "norm", "dump", "params", "pass_criteria",
}
_PI = re.compile(r"^\s*([0-9.eE+-]*)\s*\*?\s*pi\s*$")


def parse_length(value):
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _PI.match(value)
        if m:
            coef = m.group(1)
            return (float(coef) if coef else 1.0) * math.pi
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigurationError(f"cannot parse length {value!r}")


@dataclass
class ExperimentConfig:
    scenario: str
    seed: int = 0
    output_dir: str = "flowlab-out"
    grid: dict = field(default_factory=dict)
    background: dict = field(default_factory=dict)
    T: float = 0.05
    dt: float | None = None
    epsilon_ladder: list = field(default_factory=lambda: [1e-3, 1e-2])
    delta: float = 0.1
    tol: float | None = None
    max_iter: int = 50
    pieces: int = 1
    norm: dict = field(default_factory=dict)
    dump: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    pass_criteria: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def build_grid(self, scale=1):
        g = self.grid
        res = [int(r) * scale for r in g["resolution"]]
        return build_grid(int(g["dim"]), res, g["periods"], g.get("order", DEFAULT_ORDER))

    @property
    def stride(self):
        return int(self.norm.get("stride", 1))

    @property
    def config_hash(self):
        canon = yaml.safe_dump(self.raw, sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()


def validate(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("configuration must be a mapping")
    unknown = set(raw) - _KNOWN
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
    scenario = raw.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigurationError(
            f"unknown scenario {scenario!r}; valid scenarios: {', '.join(SCENARIOS)}"
        )
    grid = dict(raw.get("grid") or {})
    grid.setdefault("dim", 2)
    dim = int(grid["dim"])
    grid.setdefault("resolution", [64] * dim)
    grid.setdefault("periods", [2 * math.pi] * dim)
    grid["periods"] = [parse_length(p) for p in grid["periods"]]
    build_grid(dim, grid["resolution"], grid["periods"], grid.get("order", DEFAULT_ORDER))

    bg = dict(raw.get("background") or {})
    bg.setdefault("family", "flat")
    bg.setdefault("mode", "static")
    if bg["family"] not in FAMILIES:
        raise ConfigurationError(f"unknown metric family {bg['family']!r}; valid: {', '.join(FAMILIES)}")
    if bg["mode"] not in ("static", "ricci-flow"):
        raise ConfigurationError(f"background mode must be static or ricci-flow, got {bg['mode']!r}")

    crit = raw.get("pass_criteria") or {}
    for name, rule in crit.items():
        if not isinstance(rule, dict) or not set(rule) <= {"max", "min", "equals"} or not rule:
            raise ConfigurationError(f"pass criterion {name!r} must be a mapping with max/min/equals")

    cfg = ExperimentConfig(
        scenario=scenario,
        seed=int(raw.get("seed", 0)),
        output_dir=str(raw.get("output_dir", f"flowlab-out/{scenario}")),
        grid=grid,
        background=bg,
        T=float(raw.get("T", 0.05)),
        dt=None if raw.get("dt") is None else float(raw["dt"]),
        epsilon_ladder=[float(e) for e in raw.get("epsilon_ladder", [1e-3, 1e-2])],
        delta=float(raw.get("delta", 0.1)),
        tol=None if raw.get("tol") is None else float(raw["tol"]),
        max_iter=int(raw.get("max_iter", 50)),
        pieces=int(raw.get("pieces", 1)),
        norm=dict(raw.get("norm") or {}),
        dump=dict(raw.get("dump") or {}),
        params=dict(raw.get("params") or {}),
        pass_criteria=dict(crit),
        raw=raw,
    )
    if not cfg.T > 0 or not cfg.delta > 0 or cfg.pieces < 1 or cfg.max_iter < 1:
        raise ConfigurationError("T, delta must be positive; pieces, max_iter at least 1")
    return cfg


def load_config(source) -> ExperimentConfig:
    """Load from a path, a YAML string, or an already-parsed mapping."""
    if isinstance(source, dict):
        return validate(dict(source))
    path = Path(source)
    if path.exists():
        with path.open() as fh:
            return validate(yaml.safe_load(fh))
    raise ConfigurationError(f"configuration file {source} not found")
