"""Scenario configuration: a versioned, fully deterministic description of
one pipeline run.

Configs are JSON on disk.  Every tolerance and cutoff any backend consumes
has a default in DEFAULTS below; there are no hidden constants.  Any scalar
field can be overridden through environment variables with the DCE_ prefix
(for example DCE_EPSILON=2e-3, DCE_K_MAX=128); list fields accept a
comma-separated string (DCE_TAU_GRID=0.01,0.02).
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

from .cavity import ConfigurationError

SCHEMA_VERSION = 1

PIPELINES = ("short-time", "fock-oracle", "resonance", "gaussian",
             "field-oracle", "crosscheck")

ENV_PREFIX = "DCE_"

# safe ranges enforced by validate(); keep in sync with the README table
_RANGES = {
    "epsilon": (1e-6, 0.1),
    "p": (1, 8),
    "k_max": (2, 4096),
    "n_max": (2, 12),
    "n_cut": (0, 1 << 20),
    "l_sum_max": (8, 65536),
    "tol": (1e-12, 1e-6),
    "threads": (1, 256),
}


@dataclass
class ScenarioConfig:
    """One deterministic scenario; seed-free by construction."""

    pipeline: str = "short-time"
    epsilon: float = 1e-3
    p: int = 2
    tau_grid: list = field(default_factory=lambda: [0.01, 0.02, 0.05, 0.1])
    p_list: list = field(default_factory=lambda: [2, 3, 4, 5])
    mode_list: list = field(default_factory=lambda: [1, 3, 5])
    k_max: int = 64
    n_max: int = 4
    n_cut: int = 0  # 0 means adaptive
    l_sum_max: int = 0  # 0 means 10*k_max
    tol: float = 1e-9
    threads: int = 0  # 0 means available parallelism
    output_path: str = "out"
    schema_version: int = SCHEMA_VERSION

    def validate(self) -> "ScenarioConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigurationError(
                f"schema_version {self.schema_version} != {SCHEMA_VERSION}")
        if self.pipeline not in PIPELINES:
            raise ConfigurationError(
                f"pipeline {self.pipeline!r} not one of {PIPELINES}")
        for name in ("epsilon", "p", "k_max", "n_max", "tol"):
            lo, hi = _RANGES[name]
            v = getattr(self, name)
            if not (lo <= v <= hi):
                raise ConfigurationError(f"{name}={v} outside [{lo}, {hi}]")
        for name in ("n_cut", "l_sum_max", "threads"):
            lo, hi = _RANGES[name]
            v = getattr(self, name)
            if v != 0 and not (lo <= v <= hi):
                raise ConfigurationError(f"{name}={v} outside [{lo}, {hi}] (or 0)")
        for name in ("tau_grid", "p_list", "mode_list"):
            grid = getattr(self, name)
            if not grid:
                raise ConfigurationError(f"{name} must be nonempty")
            if sorted(grid) != list(grid):
                raise ConfigurationError(f"{name} must be sorted: {grid}")
        if any(t < 0 for t in self.tau_grid):
            raise ConfigurationError(f"tau_grid has negative entries: {self.tau_grid}")
        if any(m < 1 or m % 2 == 0 for m in self.mode_list):
            raise ConfigurationError(
                f"mode_list must contain odd modes >= 1: {self.mode_list}")
        if any(not 1 <= p <= 8 for p in self.p_list):
            raise ConfigurationError(f"p_list entries must be in 1..8: {self.p_list}")
        return self

    # resolved values for the 0-means-default knobs
    def resolved_l_sum_max(self) -> int:
        return self.l_sum_max if self.l_sum_max else 10 * self.k_max

    def resolved_threads(self) -> int:
        return self.threads if self.threads else (os.cpu_count() or 1)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data).validate()


def _coerce(name: str, raw: str, template):
    if isinstance(template, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    if isinstance(template, list):
        items = [s for s in raw.split(",") if s.strip()]
        if template and isinstance(template[0], int) and name != "tau_grid":
            return [int(s) for s in items]
        return [float(s) for s in items]
    return raw


def apply_env_overrides(config: ScenarioConfig,
                        environ: dict | None = None) -> ScenarioConfig:
    """Override any field via DCE_<UPPERCASED FIELD NAME>."""
    env = os.environ if environ is None else environ
    updates = {}
    for f in dataclasses.fields(ScenarioConfig):
        key = ENV_PREFIX + f.name.upper()
        if key in env:
            updates[f.name] = _coerce(f.name, env[key],
                                      getattr(config, f.name))
    if not updates:
        return config
    return dataclasses.replace(config, **updates).validate()


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"config root must be an object, got {type(data)}")
    return ScenarioConfig.from_dict(data)


def save_config(config: ScenarioConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
