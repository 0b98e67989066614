"""Deterministic 2D multi-agent competitive survival environment."""

from .config import (
    ConfigError, PRESETS, VariantConfig, config_from_text, config_to_text,
    preset_config,
)
from .env import (
    ACTION_SIZES, AgentObservation, EnvError, EpisodeStats, StepEvents,
    SurvivalEnv, VectorizedEnv, flatten_observation, observation_layout,
    unflatten_observation,
)
from .replay import (
    Replay, ReplayError, ReplayRecorder, load_replay, replay_episode,
    save_replay,
)

__all__ = [
    "ACTION_SIZES",
    "AgentObservation",
    "ConfigError",
    "EnvError",
    "EpisodeStats",
    "PRESETS",
    "Replay",
    "ReplayError",
    "ReplayRecorder",
    "StepEvents",
    "SurvivalEnv",
    "VariantConfig",
    "VectorizedEnv",
    "config_from_text",
    "config_to_text",
    "flatten_observation",
    "load_replay",
    "observation_layout",
    "preset_config",
    "replay_episode",
    "save_replay",
    "unflatten_observation",
]

__version__ = "0.1.0"
