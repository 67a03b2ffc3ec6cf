"""Experiment configuration: YAML file -> defaults -> validated dataclasses.

Precedence is CLI flag > file value > default. Every section is optional;
unknown keys are rejected so typos do not silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from eswm.mechanism import PaymentPolicy
from eswm.model import ConfigError, PopulationSpec

MODES = ("static", "reselection")


@dataclass(frozen=True)
class ReselectionRule:
    exponent: float = 0.5
    floor: float = 1e-6

    def __post_init__(self):
        if not (self.exponent > 0 and math.isfinite(self.exponent)):
            raise ConfigError("reselection.exponent", "must be > 0")
        if not (self.floor > 0 and math.isfinite(self.floor)):
            raise ConfigError("reselection.floor", "must be > 0")


@dataclass(frozen=True)
class ExperimentConfig:
    population: PopulationSpec = field(default_factory=PopulationSpec)
    policy: PaymentPolicy = field(default_factory=PaymentPolicy)
    reselection: ReselectionRule = field(default_factory=ReselectionRule)
    mode: str = "reselection"
    epochs: int = 30
    replications: int = 200
    seed: int = 0
    out: str = "results"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError("mode", f"must be one of {MODES}, got {self.mode!r}")
        if not _is_int(self.epochs) or self.epochs < 1:
            raise ConfigError("epochs", "must be an integer >= 1")
        if not _is_int(self.replications) or self.replications < 1:
            raise ConfigError("replications", "must be an integer >= 1")
        if not _is_int(self.seed) or self.seed < 0:
            raise ConfigError("seed", "must be a non-negative integer")

    @property
    def capacity(self) -> int:
        return self.population.capacity

    def replace(self, **changes: Any) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _build(cls, section: str, data: Mapping[str, Any] | None):
    if data is None:
        return cls()
    if not isinstance(data, Mapping):
        raise ConfigError(section, "must be a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{section}.{unknown[0]}", "unknown key")
    try:
        return cls(**data)
    except ConfigError as exc:
        if exc.field.startswith(section):
            raise
        raise ConfigError(f"{section}.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(section, str(exc)) from None


def config_from_dict(data: Mapping[str, Any] | None) -> ExperimentConfig:
    data = dict(data or {})
    top = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(data) - top)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    kwargs = {k: v for k, v in data.items() if k not in ("population", "policy", "reselection")}
    if "out" in kwargs:
        kwargs["out"] = str(kwargs["out"])
    return ExperimentConfig(
        population=_build(PopulationSpec, "population", data.get("population")),
        policy=_build(PaymentPolicy, "policy", data.get("policy")),
        reselection=_build(ReselectionRule, "reselection", data.get("reselection")),
        **kwargs,
    )


def config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    pop = config.population
    return {
        "population": {
            "requesters": pop.requesters,
            "providers": pop.providers,
            "capacity": pop.capacity,
            "value": list(pop.value),
            "deadline": list(pop.deadline),
            "depreciation_rate": list(pop.depreciation_rate),
            "curves": [c.value for c in pop.curves],
            "cost": list(pop.cost),
            "on_time_prob": list(pop.on_time_prob),
            "late_rate": list(pop.late_rate),
        },
        "policy": dataclasses.asdict(config.policy),
        "reselection": dataclasses.asdict(config.reselection),
        "mode": config.mode,
        "epochs": config.epochs,
        "replications": config.replications,
        "seed": config.seed,
        "out": config.out,
    }


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=False)


def parse_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> ExperimentConfig:
    """Load ``path`` (may be omitted or empty) and apply top-level ``overrides``.

    Override keys may be dotted (``"population.capacity"``); ``None`` values are ignored.
    """
    data: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError("config", f"file not found: {path}")
        try:
            loaded = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError("config", f"malformed YAML in {path}: {exc}") from None
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError("config", "top level must be a mapping")
        data = loaded or {}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        *parents, leaf = key.split(".")
        node = data
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return config_from_dict(data)
