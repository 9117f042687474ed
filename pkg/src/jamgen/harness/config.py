"""Experiment configuration: versioned JSON schema, unknown keys rejected."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError

SCHEMA_VERSION = 1

SCENARIOS = ("autoencoder", "modulation", "ofdm")
ATTACKS = ("none", "single_uap", "pgm")
DEFENSES = ("none", "subtract", "adv_train")
KNOWLEDGE = ("ad_hoc", "structure_aware", "perfect_aware")


@dataclass
class AttackSpec:
    kind: str = "none"
    psr_db: float = -6.0
    alpha: float = 0.0
    beta: float | None = None   # None -> scenario default diversity weight

    black_box: bool = False

    def validate(self):
        if self.kind not in ATTACKS:
            raise ConfigError(f"unknown attack {self.kind!r}")
        if self.alpha < 0 or (self.beta is not None and self.beta < 0):
            raise ConfigError("attack weights must be nonnegative")


@dataclass
class DefenseSpec:
    kind: str = "none"
    knowledge: str = "ad_hoc"

    def validate(self):
        if self.kind not in DEFENSES:
            raise ConfigError(f"unknown defense {self.kind!r}")
        if self.knowledge not in KNOWLEDGE:
            raise ConfigError(f"unknown defender knowledge {self.knowledge!r}")


@dataclass
class ExperimentConfig:
    scenario: str
    attack: AttackSpec = field(default_factory=AttackSpec)
    defense: DefenseSpec = field(default_factory=DefenseSpec)
    sweep: list = field(default_factory=list)
    trials: int = 10000
    seed: int = 0
    out: str | None = None
    desk_scale: bool = True
    phase_policy: str | None = None
    include_jamming: bool = False
    artifacts: dict | None = None

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if not self.sweep:
            raise ConfigError("sweep range must be non-empty")
        if self.trials < 100:
            raise ConfigError("trials must be at least 100")
        self.attack.validate()
        self.defense.validate()
        if self.phase_policy is not None:
            from ..signal_core import PHASE_POLICIES
            if self.phase_policy not in PHASE_POLICIES:
                raise ConfigError(f"unknown phase_policy {self.phase_policy!r}")
        if self.defense.kind != "none" and self.attack.kind == "none":
            raise ConfigError("defense evaluation requires an attack")
        return self


def _from_dict(cls, data: dict, where: str):
    fields = {f for f in cls.__dataclass_fields__}
    unknown = set(data) - fields
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    return cls(**data)


def parse_config(data: dict) -> ExperimentConfig:
    data = dict(data)
    version = data.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version}")
    attack = _from_dict(AttackSpec, data.pop("attack", {}), "attack")
    defense = _from_dict(DefenseSpec, data.pop("defense", {}), "defense")
    sweep = data.pop("sweep", None)
    if isinstance(sweep, dict):
        unknown = set(sweep) - {"start", "stop", "step"}
        if unknown:
            raise ConfigError(f"unknown keys in sweep: {sorted(unknown)}")
        try:
            values = []
            v = sweep["start"]
            while v <= sweep["stop"] + 1e-9:
                values.append(round(v, 9))
                v += sweep["step"]
            sweep = values
        except KeyError as e:
            raise ConfigError(f"sweep range needs start/stop/step ({e})") from None
    cfg = _from_dict(ExperimentConfig, {**data, "attack": attack, "defense": defense,
                                        "sweep": sweep or []}, "config")
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path}: {e}") from None
    return parse_config(data)
