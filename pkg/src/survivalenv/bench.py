"""Step-time benchmark: mean and standard deviation of env.step wall time
over the first 100 steps of an episode, per configuration."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

from .config import PRESETS, VariantConfig, preset_config
from .env import SurvivalEnv
from .runner import make_policy


@dataclass
class BenchEntry:
    name: str
    mean: float  # seconds per step
    std: float
    steps: int


@dataclass
class BenchReport:
    entries: list[BenchEntry]

    def entry(self, name: str) -> BenchEntry:
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def as_lines(self) -> str:
        width = max(len(e.name) for e in self.entries)
        lines = [f"{'configuration':<{width}}  mean s/step   std"]
        for e in self.entries:
            lines.append(f"{e.name:<{width}}  {e.mean:.6f}      {e.std:.6f}")
        return "\n".join(lines)


def feature_config(agents: int, heals: int, boxes: int,
                   cameras: bool) -> VariantConfig:
    config = preset_config("ffa-1")
    config.agents = agents
    config.heal_count = heals
    config.box_count = boxes
    config.cameras.enabled = cameras
    return config


FEATURE_CONFIGS = {
    "5-agents": lambda: feature_config(5, 0, 0, True),
    "5-agents-no-cameras": lambda: feature_config(5, 0, 0, False),
    "10-agents": lambda: feature_config(10, 0, 0, True),
    "10-agents-no-cameras": lambda: feature_config(10, 0, 0, False),
    "2-agents-10-heals": lambda: feature_config(2, 10, 0, True),
    "2-agents-20-boxes": lambda: feature_config(2, 0, 20, True),
    "10-agents-10-heals-20-boxes": lambda: feature_config(10, 10, 20, True),
    "10-agents-10-heals-20-boxes-no-cameras":
        lambda: feature_config(10, 10, 20, False),
}


def time_config(config: VariantConfig, steps: int = 100,
                seed: int = 0) -> BenchEntry:
    env = SurvivalEnv(config)
    policy = make_policy("random", 1)
    observations = env.reset(seed)
    times: list[float] = []
    episode = 0
    while len(times) < steps:
        if env.done:
            episode += 1
            observations = env.reset(seed + episode)
            continue
        actions = [
            policy.act(i, observations[i]) if env.agent_alive(i) else None
            for i in range(config.agents)
        ]
        start = time.perf_counter()
        observations, _, _, _ = env.step(actions)
        times.append(time.perf_counter() - start)
    mean = statistics.fmean(times)
    std = statistics.pstdev(times)
    return BenchEntry("", mean, std, steps)


def benchmark(names: list[str] | None = None, steps: int = 100,
              seed: int = 0) -> BenchReport:
    """Benchmark the given preset/feature configuration names; all of them
    when names is None."""
    available = dict((name, PRESETS[name]) for name in PRESETS)
    available.update(FEATURE_CONFIGS)
    if names is None:
        names = list(available)
    entries: list[BenchEntry] = []
    for name in names:
        if name not in available:
            raise KeyError(f"unknown benchmark configuration {name!r}")
        entry = time_config(available[name](), steps=steps, seed=seed)
        entry.name = name
        entries.append(entry)
    return BenchReport(entries)
