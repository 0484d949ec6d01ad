"""Experiment configuration: nested YAML sections, strict keys."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

KINDS = ("simulate-cmhd", "simulate-imhd", "sweep-lambda", "reconnect", "besov-check")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class GridSection:
    dim: int = 2
    n: int = 64
    box_length: float = 2 * math.pi


@dataclass
class PhysicsSection:
    mu: float = 0.05
    lam: float = 0.0
    eta: float = 0.05
    gamma: float = 1.4
    A: float | None = None
    density_floor: float = 1e-3


@dataclass
class InitialSection:
    recipe: str = "orszag-tang"
    params: dict = field(default_factory=dict)


@dataclass
class TimeSection:
    t_final: float = 1.0
    dt: float | None = None
    cfl: float | None = None


@dataclass
class OutputSection:
    directory: str = "runs/out"
    stride: int = 10
    snapshots: bool = False


@dataclass
class SweepSection:
    lambdas: list = field(default_factory=lambda: [10.0, 40.0, 160.0, 640.0])
    workers: int = 1


@dataclass
class ReconnectSection:
    M: float = 0.5
    T: float = 1.0
    epsilon: float = 0.05
    N: int = 12
    abc: list = field(default_factory=lambda: [1.0, 0.1, 0.1])
    phi_width: float = math.pi
    psi_width: float = 1.0
    cutoff: float = 4.0
    resolutions: list = field(default_factory=lambda: [48])
    trace_seeds: int = 8
    trace_length: float = 5.0


@dataclass
class BesovSection:
    samples: int = 1000
    bernstein_n: int = 256
    bernstein_bands: list = field(default_factory=lambda: [2, 3, 4, 5])
    bernstein_samples: int = 20


@dataclass
class ExperimentConfig:
    kind: str = "simulate-imhd"
    seed: int = 0
    grid: GridSection = field(default_factory=GridSection)
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    initial: InitialSection = field(default_factory=InitialSection)
    time: TimeSection = field(default_factory=TimeSection)
    output: OutputSection = field(default_factory=OutputSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    reconnect: ReconnectSection = field(default_factory=ReconnectSection)
    besov: BesovSection = field(default_factory=BesovSection)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_SECTIONS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(path: str, value, default):
    if default is None or isinstance(default, float):
        if value is None and default is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return list(value)
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected a mapping, got {value!r}")
        return dict(value)
    return value


def _section(name: str, cls, data) -> Any:
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected a mapping")
    obj = cls()
    known = {f.name for f in dataclasses.fields(cls)}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"{name}.{key}: unknown key")
        setattr(obj, key, _coerce(f"{name}.{key}", value, getattr(obj, key)))
    return obj


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a mapping")
    cfg = ExperimentConfig()
    for key, value in data.items():
        if key not in _SECTIONS:
            raise ConfigError(f"{key}: unknown key")
        default = getattr(cfg, key)
        if dataclasses.is_dataclass(default):
            setattr(cfg, key, _section(key, type(default), value))
        else:
            setattr(cfg, key, _coerce(key, value, default))
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from None
    return config_from_dict(data or {})


def validate(cfg: ExperimentConfig) -> None:
    from ..dynamics import PhysicalParams
    from ..spectral import Grid

    if cfg.kind not in KINDS:
        raise ConfigError(f"kind: must be one of {', '.join(KINDS)}")
    try:
        Grid(cfg.grid.dim, cfg.grid.n, cfg.grid.box_length)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None
    try:
        physical_params(cfg)
    except ValueError as exc:
        raise ConfigError(f"physics: {exc}") from None
    from .recipes import RECIPES

    if cfg.initial.recipe not in RECIPES:
        raise ConfigError(f"initial.recipe: unknown recipe {cfg.initial.recipe!r}; choose from {', '.join(RECIPES)}")
    if not cfg.time.t_final > 0:
        raise ConfigError("time.t_final: must be positive")
    if cfg.time.dt is None and cfg.time.cfl is None:
        raise ConfigError("time: one of dt or cfl is required")
    if cfg.time.dt is not None and cfg.time.dt <= 0:
        raise ConfigError("time.dt: must be positive")
    if cfg.time.cfl is not None and not 0 < cfg.time.cfl <= 0.4:
        raise ConfigError("time.cfl: must lie in (0, 0.4]")
    if cfg.output.stride < 1:
        raise ConfigError("output.stride: must be at least 1")
    if cfg.kind == "sweep-lambda":
        if len(cfg.sweep.lambdas) < 3:
            raise ConfigError("sweep.lambdas: at least 3 values are required")
        if cfg.time.dt is None:
            raise ConfigError("time.dt: sweeps need a fixed step so sample times align")
        for lam in cfg.sweep.lambdas:
            try:
                PhysicalParams(cfg.physics.mu, float(lam), cfg.physics.eta)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"sweep.lambdas: {lam!r}: {exc}") from None
        if cfg.sweep.workers < 1:
            raise ConfigError("sweep.workers: must be at least 1")
    if cfg.kind == "reconnect":
        if cfg.grid.dim != 3:
            raise ConfigError("grid.dim: reconnect runs are three-dimensional")
        if len(cfg.reconnect.abc) != 3:
            raise ConfigError("reconnect.abc: need three coefficients")
        for n in cfg.reconnect.resolutions:
            try:
                Grid(3, n)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"reconnect.resolutions: {exc}") from None


def physical_params(cfg: ExperimentConfig, lam: float | None = None):
    from ..dynamics import PhysicalParams

    p = cfg.physics
    return PhysicalParams(mu=p.mu, lam=p.lam if lam is None else float(lam), eta=p.eta, gamma=p.gamma,
                          A=p.A, density_floor=p.density_floor)


def apply_overrides(cfg: ExperimentConfig, overrides: dict[str, Any]) -> ExperimentConfig:
    """Set dotted keys (``grid.n``) then re-validate."""
    data = cfg.to_dict()
    for key, value in overrides.items():
        if value is None:
            continue
        node = data
        parts = key.split(".")
        for p in parts[:-1]:
            node = node[p]
        node[parts[-1]] = value
    return config_from_dict(data)
