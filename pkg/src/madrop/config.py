"""Experiment configuration: defaults, schema validation, flag overrides.

Configs are plain JSON documents. Unknown keys are rejected everywhere so
typos fail loudly; command-line flags override file values which override
the documented defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .anneal import SaConfig
from .schemes import parse_scheme

__all__ = ["ConfigError", "ExperimentConfig", "SimSettings", "Tolerances",
           "load_config"]

SWEEP_AXES = ("scheme", "B", "N", "theta_tar")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _check_keys(data: dict, allowed, where: str) -> None:
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}; "
                          f"allowed: {sorted(allowed)}")


def _build(cls, data: dict, where: str):
    _check_keys(data, [f.name for f in fields(cls)], where)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


@dataclass(frozen=True)
class SimSettings:
    K: int = 200
    slots: int = 100_000
    warmup: int = 1000

    def __post_init__(self):
        if self.K < 1 or self.slots < 1:
            raise ConfigError("sim.K and sim.slots must be >= 1")
        if not 0 <= self.warmup < self.slots:
            raise ConfigError("sim.warmup must lie in [0, slots)")


@dataclass(frozen=True)
class Tolerances:
    theta_tol: float = 0.005
    tv_tol: float = 0.01
    energy_tol_db: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str = "best"
    B: int = 3
    N: int = 3
    theta_tar: float = 0.1
    C: float = 0.5
    delta: float = 0.01
    alpha: float = 2.0
    eps: float = 1e-6
    seed: int = 0
    theta_lim: bool = False
    workers: int = 1
    sa: SaConfig = field(default_factory=SaConfig)
    sim: SimSettings | None = None
    sweep: dict | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        parse_scheme(self.scheme)  # raises on unknown names
        if self.B < 0 or self.N < 0 or self.B + self.N < 1:
            raise ConfigError("need B >= 0, N >= 0 and B + N >= 1")
        if not 0.0 <= self.theta_tar <= 1.0:
            raise ConfigError("theta_tar must lie in [0, 1]")
        if self.C <= 0 or self.eps <= 0:
            raise ConfigError("C and eps must be positive")
        if not 0.0 < self.delta <= 1.0 or self.alpha <= 0:
            raise ConfigError("delta must lie in (0, 1] and alpha be positive")
        if self.seed < 0 or self.workers < 1:
            raise ConfigError("seed must be >= 0 and workers >= 1")
        if self.sweep is not None:
            _check_keys(self.sweep, SWEEP_AXES, "sweep")
            for axis, values in self.sweep.items():
                if not isinstance(values, (list, tuple)) or not values:
                    raise ConfigError(f"sweep axis {axis!r} must be a non-empty list")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        _check_keys(data, [f.name for f in fields(cls)], "config")
        data = dict(data)
        if "sa" in data and isinstance(data["sa"], dict):
            sa = dict(data["sa"])
            sa.pop("seed", None)  # the experiment seed drives everything
            data["sa"] = _build(SaConfig, sa, "sa settings")
        if "sim" in data and isinstance(data["sim"], dict):
            data["sim"] = _build(SimSettings, data["sim"], "sim settings")
        if "tolerances" in data and isinstance(data["tolerances"], dict):
            data["tolerances"] = _build(Tolerances, data["tolerances"], "tolerances")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def override(self, **kwargs) -> "ExperimentConfig":
        data = {k: v for k, v in kwargs.items() if v is not None}
        if not data:
            return self
        merged = asdict(self)
        # asdict recursed into the nested dataclasses; restore them.
        merged["sa"] = self.sa
        merged["sim"] = self.sim
        merged["tolerances"] = self.tolerances
        merged["sweep"] = self.sweep
        merged.update(data)
        return ExperimentConfig(**merged)


def load_config(path: str | Path | None) -> ExperimentConfig:
    """Config from a JSON file, or pure defaults when no path is given."""
    if path is None:
        return ExperimentConfig()
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return ExperimentConfig.from_dict(data)
