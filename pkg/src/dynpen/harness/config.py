"""Run configuration: dataclass sections addressed by flat dotted keys.

Config files are TOML restricted to ``section.key = value`` lines, e.g.::

    study = "vehicle"
    seed = 3
    penalty.kind = "dynamic"
    penalty.mu_max = 20.0
    agent.gamma = 0.99

Every key is optional. Missing keys take the defaults of the selected study.
"""
from __future__ import annotations

import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np

from ..agent import AgentConfig
from ..envs import VehicleEnv
from ..penalty import PenaltyKind, make_penalty

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

STUDIES = ("regress1d", "vehicle")
PENALTY_KINDS = ("uniform", "linear", "dynamic")
DEFAULT_EPISODES = {"regress1d": 500, "vehicle": 2000}


@dataclass
class PenaltyParams:
    kind: str = "dynamic"
    level: float = 20.0
    factor: float = 20.0
    mu_min: float = 0.05
    mu_max: float = 20.0
    growth: float = 2.0
    alpha: float = 60.0
    window: int = 1

    @classmethod
    def for_study(cls, study: str) -> "PenaltyParams":
        if study == "regress1d":
            return cls(level=50.0, factor=50.0, mu_min=0.1, mu_max=50.0)
        return cls()

    def build(self) -> PenaltyKind:
        if self.kind not in PENALTY_KINDS:
            raise ValueError(f"penalty.kind must be one of {PENALTY_KINDS}, got {self.kind!r}")
        return make_penalty(self.kind, level=self.level, factor=self.factor, mu_min=self.mu_min,
                            mu_max=self.mu_max, growth=self.growth, alpha=self.alpha,
                            window=self.window)


@dataclass
class EnvParams:
    rho: float = 50.0
    horizon: int = 20
    dt: float = 1.0
    integrator: str = "euler"
    position: tuple[float, float] = (-1.0, 1.0)
    velocity: tuple[float, float] = (-0.25, 1.0)

    def build(self) -> VehicleEnv:
        return VehicleEnv(tuple(self.position), tuple(self.velocity), self.rho, self.horizon,
                          self.dt, self.integrator)


@dataclass
class ReplayParams:
    capacity: int = 10_000


@dataclass
class RegressParams:
    samples_per_episode: int = 20
    batch_size: int = 64
    updates_per_episode: int = 1
    lr: float = 1e-3
    optimizer: str = "adam"
    hidden: tuple[int, ...] = (64, 64, 64)
    grid_points: int = 1001
    snapshot_episodes: tuple[int, ...] = (50, 150, 500)
    final_window: int = 100
    interior: tuple[float, float] = (-4.5, 4.5)


@dataclass
class EvalParams:
    interval: int = 100
    positions: tuple[float, ...] = (-0.5, 0.0, 0.5)
    velocities: tuple[float, ...] = (-0.2, 0.0, 0.2)
    cost_threshold: float = 4.0
    checkpoints: tuple[int, ...] = (500, 1000, 1500, 2000)

    def initial_states(self) -> np.ndarray:
        return np.array([(p, v) for p in self.positions for v in self.velocities], dtype=float)


SECTIONS = {
    "penalty": PenaltyParams,
    "agent": AgentConfig,
    "env": EnvParams,
    "replay": ReplayParams,
    "regress": RegressParams,
    "eval": EvalParams,
}
TOP_LEVEL = ("study", "seed", "episodes", "out")


@dataclass
class RunConfig:
    study: str = "vehicle"
    seed: int = 0
    episodes: Optional[int] = None
    out: Optional[str] = None
    penalty: PenaltyParams = field(default_factory=PenaltyParams)
    agent: AgentConfig = field(default_factory=AgentConfig)
    env: EnvParams = field(default_factory=EnvParams)
    replay: ReplayParams = field(default_factory=ReplayParams)
    regress: RegressParams = field(default_factory=RegressParams)
    eval: EvalParams = field(default_factory=EvalParams)

    def __post_init__(self) -> None:
        if self.study not in STUDIES:
            raise ValueError(f"study must be one of {STUDIES}, got {self.study!r}")
        if self.episodes is None:
            self.episodes = DEFAULT_EPISODES[self.study]
        if self.episodes < 1:
            raise ValueError("episodes must be positive")

    @classmethod
    def for_study(cls, study: str, **top) -> "RunConfig":
        return cls(study=study, penalty=PenaltyParams.for_study(study), **top)

    @classmethod
    def from_flat(cls, flat: Mapping[str, Any]) -> "RunConfig":
        """Build from ``{"section.key": value}``; unknown keys are errors."""
        study = flat.get("study", "vehicle")
        cfg = cls.for_study(study)
        return cfg.updated(flat)

    def updated(self, flat: Mapping[str, Any]) -> "RunConfig":
        """Copy with dotted-key overrides applied."""
        top = {k: getattr(self, k) for k in TOP_LEVEL}
        sections = {name: dataclasses.asdict(getattr(self, name)) for name in SECTIONS}
        if "study" in flat and flat["study"] != self.study:
            top["episodes"] = None
            sections["penalty"] = dataclasses.asdict(PenaltyParams.for_study(flat["study"]))
        for key, value in flat.items():
            if key in TOP_LEVEL:
                top[key] = value
                continue
            section, _, name = key.partition(".")
            if section not in SECTIONS or name not in sections[section]:
                raise KeyError(f"unknown config key {key!r}")
            sections[section][name] = value
        built = {name: SECTIONS[name](**_coerce(SECTIONS[name], vals)) for name, vals in sections.items()}
        return RunConfig(**top, **built)

    def to_flat(self) -> dict[str, Any]:
        flat: dict[str, Any] = {k: getattr(self, k) for k in TOP_LEVEL if getattr(self, k) is not None}
        for name in SECTIONS:
            for key, value in dataclasses.asdict(getattr(self, name)).items():
                flat[f"{name}.{key}"] = value
        return flat

    def dumps(self) -> str:
        lines = []
        for key, value in self.to_flat().items():
            if isinstance(value, tuple):
                value = list(value)
            lines.append(f"{key} = {json.dumps(value)}")
        return "\n".join(lines) + "\n"

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())


def _coerce(cls, values: dict[str, Any]) -> dict[str, Any]:
    """Cast list values read from text back into the tuples the dataclasses expect."""
    out = dict(values)
    for f in dataclasses.fields(cls):
        if isinstance(out.get(f.name), list):
            out[f.name] = tuple(out[f.name])
    return out


def flatten(tree: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    flat = {}
    for key, value in tree.items():
        full = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, f"{full}."))
        else:
            flat[full] = value
    return flat


def parse_config(text: str) -> dict[str, Any]:
    return flatten(tomllib.loads(text))


def load_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Read a config file (if any), then apply overrides on top."""
    flat: dict[str, Any] = {}
    if path is not None:
        flat.update(parse_config(Path(path).read_text()))
    flat.update(overrides or {})
    return RunConfig.from_flat(flat)


def parse_override(item: str) -> tuple[str, Any]:
    """``key=value`` with the value read as a TOML value, falling back to a bare string."""
    key, sep, raw = item.partition("=")
    if not sep:
        raise ValueError(f"override must look like key=value, got {item!r}")
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key.strip(), value
