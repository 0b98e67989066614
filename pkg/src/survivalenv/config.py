"""Variant configuration: reward/termination presets, the eight named
experiment variants, and the human-readable config file format (TOML-style
key = value with nested sections)."""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace

from .mechanics import ZoneParams
from .physics import WorldConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(Exception):
    pass


@dataclass
class RewardParams:
    r_alive: float = 1.0
    r_dead: float = 0.0
    r_kill: float = 0.0
    r_death: float = 0.0


@dataclass
class AgentParams:
    radius: float = 0.4
    density: float = 1.0
    initial_health: int = 100
    max_health: int = 0  # 0 = uncapped
    melee_length: float = 1.0
    melee_damage: int = 20
    melee_cooldown: int = 10
    motor_force: float = 3.0
    motor_torque: float = 0.3


@dataclass
class ItemParams:
    heal_amount: int = 30
    inventory_capacity: int = 4
    give_radius: float = 1.5
    scatter_radius: float = 1.0
    box_health: int = 40
    box_half_extent_min: float = 0.3
    box_half_extent_max: float = 0.8


@dataclass
class CameraParams:
    enabled: bool = True
    half_angle: float = math.pi / 3.0
    view_range: float = -1.0  # -1 = unlimited


@dataclass
class SimParams:
    dt: float = 1.0 / 60.0
    substeps: int = 2
    spawn_cell_size: float = 2.0


TERMINATION_MODES = ("all-dead", "last-alive")


@dataclass
class VariantConfig:
    """Everything defining one environment variant."""

    agents: int = 2
    teams: bool = False
    termination: str = "all-dead"
    heal_count: int = 6
    box_count: int = 0
    max_episode_steps: int = 0  # 0 = zone schedule length + 600
    rewards: RewardParams = field(default_factory=RewardParams)
    zone: ZoneParams = field(default_factory=ZoneParams)
    world: WorldConfig = field(default_factory=WorldConfig)
    agent: AgentParams = field(default_factory=AgentParams)
    items: ItemParams = field(default_factory=ItemParams)
    cameras: CameraParams = field(default_factory=CameraParams)
    sim: SimParams = field(default_factory=SimParams)

    def validate(self) -> None:
        if self.agents < 1:
            raise ConfigError("agents must be >= 1")
        if self.teams and self.agents % 2 != 0:
            raise ConfigError("teams mode needs an even number of agents")
        if self.termination not in TERMINATION_MODES:
            raise ConfigError(f"unknown termination mode {self.termination!r}")
        if self.heal_count < 0 or self.box_count < 0:
            raise ConfigError("entity counts must be >= 0")

    def schedule_steps(self) -> int:
        return self.zone.stationary_phases * (
            self.zone.stationary_steps + self.zone.shrink_steps
        )

    def episode_step_limit(self) -> int:
        if self.max_episode_steps > 0:
            return self.max_episode_steps
        return self.schedule_steps() + 600


COMPETITIVENESS = {
    "low": (RewardParams(1.0, 0.0, 0.0, 0.0), "all-dead"),
    "medium": (RewardParams(1.0, -1.0, 0.0, 0.0), "last-alive"),
    "high": (RewardParams(1.0, -1.0, 100.0, -100.0), "last-alive"),
}


def _variant(agents: int, teams: bool, level: str, boxes: bool) -> VariantConfig:
    rewards, termination = COMPETITIVENESS[level]
    return VariantConfig(
        agents=agents,
        teams=teams,
        termination=termination,
        rewards=replace(rewards),
        heal_count=6,
        box_count=6 if boxes else 0,
    )


PRESETS = {
    "ffa-1": lambda: _variant(2, False, "low", boxes=False),
    "ffa-2": lambda: _variant(2, False, "medium", boxes=False),
    "ffa-3": lambda: _variant(2, False, "medium", boxes=True),
    "ffa-4": lambda: _variant(2, False, "high", boxes=True),
    "2v2-1": lambda: _variant(4, True, "low", boxes=True),
    "2v2-2": lambda: _variant(4, True, "medium", boxes=False),
    "2v2-3": lambda: _variant(4, True, "medium", boxes=True),
    "2v2-4": lambda: _variant(4, True, "high", boxes=True),
}


def preset_config(name: str) -> VariantConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}") from None


_SECTIONS = ("rewards", "zone", "world", "agent", "items", "cameras", "sim")


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_to_text(config: VariantConfig) -> str:
    """Canonical serialization: top-level scalars, then one section per
    nested parameter block, fields in declaration order."""
    lines = []
    for f in fields(config):
        if f.name in _SECTIONS:
            continue
        lines.append(f"{f.name} = {_format_value(getattr(config, f.name))}")
    if config.termination:  # keep strings quoted for valid TOML
        lines = [
            line if not line.startswith("termination") else
            f'termination = "{config.termination}"'
            for line in lines
        ]
    for section in _SECTIONS:
        block = getattr(config, section)
        lines.append("")
        lines.append(f"[{section}]")
        for f in fields(block):
            lines.append(f"{f.name} = {_format_value(getattr(block, f.name))}")
    return "\n".join(lines) + "\n"


_SECTION_TYPES = {
    "rewards": RewardParams,
    "zone": ZoneParams,
    "world": WorldConfig,
    "agent": AgentParams,
    "items": ItemParams,
    "cameras": CameraParams,
    "sim": SimParams,
}


def config_from_text(text: str) -> VariantConfig:
    """Parse a config file; a top-level `preset` key selects a base preset
    whose fields are then overridden field-wise."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    preset = data.pop("preset", None)
    config = preset_config(preset) if preset else VariantConfig()
    top_fields = {f.name: f for f in fields(VariantConfig)}
    for key, value in data.items():
        if key in _SECTION_TYPES:
            if not isinstance(value, dict):
                raise ConfigError(f"section [{key}] must be a table")
            block = getattr(config, key)
            known = {f.name for f in fields(_SECTION_TYPES[key])}
            for sub_key, sub_value in value.items():
                if sub_key not in known:
                    raise ConfigError(f"unknown key {key}.{sub_key}")
                setattr(block, sub_key, sub_value)
        elif key in top_fields:
            setattr(config, key, value)
        else:
            raise ConfigError(f"unknown key {key!r}")
    config.validate()
    return config
