"""Binary replay files: header (config, seed), per-step packed actions for
the agents live at that step, and optional per-step 64-bit state hashes.

Layout (little-endian): magic "SRVA", format version u16, config blob
(u32 length + canonical config text), seed u64, step count u32, hash flag
u8, then per step one byte per action category for each live agent (6 bytes
per agent, agents in index order), then step-count u64 state hashes when
the flag is set.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

from .config import VariantConfig, config_from_text, config_to_text
from .env import Action, EpisodeStats, SurvivalEnv

MAGIC = b"SRVA"
VERSION = 1


class ReplayError(Exception):
    pass


@dataclass
class Replay:
    config_text: str
    seed: int
    actions: list[list[Action]]  # per step, live agents in index order
    hashes: Optional[list[int]]

    @property
    def config(self) -> VariantConfig:
        return config_from_text(self.config_text)


class ReplayRecorder:
    """Accumulates one episode's actions and state hashes."""

    def __init__(self, config: VariantConfig, seed: int):
        self.config_text = config_to_text(config)
        self.seed = seed
        self.actions: list[list[Action]] = []
        self.hashes: list[int] = []

    def record_step(self, live_actions: list[Action], state_hash: int) -> None:
        self.actions.append(list(live_actions))
        self.hashes.append(state_hash)

    def to_replay(self) -> Replay:
        return Replay(self.config_text, self.seed, self.actions, self.hashes)


def save_replay(replay: Replay, path: str) -> None:
    config_blob = replay.config_text.encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", VERSION))
        fh.write(struct.pack("<I", len(config_blob)))
        fh.write(config_blob)
        fh.write(struct.pack("<Q", replay.seed))
        fh.write(struct.pack("<I", len(replay.actions)))
        fh.write(struct.pack("<B", 1 if replay.hashes else 0))
        for step_actions in replay.actions:
            for action in step_actions:
                fh.write(bytes(action))
        if replay.hashes:
            fh.write(struct.pack(f"<{len(replay.hashes)}Q", *replay.hashes))


def load_replay(path: str) -> Replay:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ReplayError("not a replay file (bad magic)")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise ReplayError(f"unsupported replay version {version}")
    (config_len,) = struct.unpack_from("<I", data, 6)
    offset = 10
    config_text = data[offset:offset + config_len].decode()
    offset += config_len
    (seed,) = struct.unpack_from("<Q", data, offset)
    offset += 8
    (step_count,) = struct.unpack_from("<I", data, offset)
    offset += 4
    (has_hashes,) = struct.unpack_from("<B", data, offset)
    offset += 1

    # Replaying the config determines how many agents were live per step,
    # which is how the packed action stream is segmented.
    config = config_from_text(config_text)
    env = SurvivalEnv(config)
    env.reset(seed)
    actions: list[list[Action]] = []
    for _ in range(step_count):
        live = env.live_agent_indices()
        step_actions: list[Action] = []
        per_agent: list[Optional[Action]] = [None] * config.agents
        for i in live:
            raw = data[offset:offset + 6]
            if len(raw) < 6:
                raise ReplayError("truncated replay action stream")
            action = tuple(raw)
            step_actions.append(action)  # type: ignore[arg-type]
            per_agent[i] = action  # type: ignore[assignment]
            offset += 6
        actions.append(step_actions)
        if not env.done:
            env.step(per_agent)
    hashes: Optional[list[int]] = None
    if has_hashes:
        hashes = list(struct.unpack_from(f"<{step_count}Q", data, offset))
    return Replay(config_text, seed, actions, hashes)


def replay_episode(replay: Replay) -> EpisodeStats:
    """Re-run the recorded episode; raises on state-hash divergence."""
    env = SurvivalEnv(replay.config)
    env.reset(replay.seed)
    for step, step_actions in enumerate(replay.actions):
        live = env.live_agent_indices()
        if len(live) != len(step_actions):
            raise ReplayError(
                f"divergence at step {step}: {len(live)} live agents, "
                f"{len(step_actions)} recorded actions"
            )
        per_agent: list[Optional[Action]] = [None] * replay.config.agents
        for i, action in zip(live, step_actions):
            per_agent[i] = action
        _, _, done, info = env.step(per_agent)
        if replay.hashes is not None and info["state_hash"] != replay.hashes[step]:
            raise ReplayError(f"state-hash divergence at step {step}")
        if done and step + 1 < len(replay.actions):
            raise ReplayError(f"episode ended early at step {step}")
    return env.stats
