"""Episode driving helpers shared by the CLI, benchmarks and tests."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .config import VariantConfig
from .env import Action, EpisodeStats, SurvivalEnv
from .policies import RandomPolicy, ZoneFollowerPolicy
from .replay import Replay, ReplayRecorder


def make_policy(name: str, seed: int):
    if name == "random":
        return RandomPolicy(seed)
    if name == "zone-follower":
        return ZoneFollowerPolicy(seed)
    raise ValueError(f"unknown policy {name!r}")


@dataclass
class EpisodeResult:
    stats: EpisodeStats
    hashes: list[int]
    survival_steps: list[int]
    replay: Optional[Replay] = None


def run_episode(
    env: SurvivalEnv,
    policy,
    seed: int,
    max_steps: Optional[int] = None,
    record: bool = False,
) -> EpisodeResult:
    observations = env.reset(seed)
    recorder = ReplayRecorder(env.config, seed) if record else None
    hashes: list[int] = []
    survival = [0] * env.config.agents
    step = 0
    while not env.done:
        if max_steps is not None and step >= max_steps:
            break
        live = env.live_agent_indices()
        per_agent: list[Optional[Action]] = [None] * env.config.agents
        for i in live:
            per_agent[i] = policy.act(i, observations[i])
            survival[i] = step + 1
        observations, _, _, info = env.step(per_agent)
        hashes.append(info["state_hash"])
        if recorder is not None:
            recorder.record_step(
                [per_agent[i] for i in live],  # type: ignore[misc]
                info["state_hash"],
            )
        step += 1
    return EpisodeResult(
        env.stats, hashes,
        survival,
        recorder.to_replay() if recorder else None,
    )


def hash_stream(
    config: VariantConfig, policy_name: str, seed: int, steps: int
) -> list[int]:
    """Per-step state hashes over `steps` steps, resetting (with consecutive
    seeds) whenever an episode ends; the determinism fingerprint."""
    env = SurvivalEnv(config)
    policy = make_policy(policy_name, seed)
    hashes: list[int] = []
    episode = 0
    observations = env.reset(seed)
    while len(hashes) < steps:
        if env.done:
            episode += 1
            observations = env.reset(seed + episode)
            continue
        per_agent: list[Optional[Action]] = [None] * config.agents
        for i in env.live_agent_indices():
            per_agent[i] = policy.act(i, observations[i])
        observations, _, _, info = env.step(per_agent)
        hashes.append(info["state_hash"])
    return hashes
