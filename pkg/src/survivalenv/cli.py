"""Command line interface: run episodes, verify replays, benchmark, render.

Exit codes: 0 success, 1 runtime failure (e.g. replay divergence), 2 usage
errors (click's default for bad arguments).
"""

from __future__ import annotations

import sys

import click

from .bench import FEATURE_CONFIGS, benchmark
from .config import ConfigError, PRESETS, config_from_text, preset_config
from .env import SurvivalEnv
from .render import render_replay_frames
from .replay import ReplayError, load_replay, replay_episode, save_replay
from .runner import make_policy, run_episode


def _load_config(preset: str | None, config_path: str | None):
    if config_path is not None:
        with open(config_path, "r", encoding="utf-8") as fh:
            return config_from_text(fh.read())
    return preset_config(preset or "ffa-1")


@click.group()
def main() -> None:
    """Deterministic 2D multi-agent survival environment."""


@main.command()
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None,
              help="Variant preset (default ffa-1).")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="Config file overriding --preset.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--policy", type=click.Choice(["random", "zone-follower"]),
              default="random", show_default=True)
@click.option("--steps", type=int, default=None,
              help="Step cap (default: run the episode to completion).")
@click.option("--record", "record_path", type=click.Path(), default=None,
              help="Write a replay file of the episode.")
def run(preset, config_path, seed, policy, steps, record_path) -> None:
    """Run one episode and print its statistics."""
    try:
        config = _load_config(preset, config_path)
        env = SurvivalEnv(config)
        result = run_episode(env, make_policy(policy, seed), seed,
                             max_steps=steps, record=record_path is not None)
    except (ConfigError, ValueError) as exc:
        raise click.ClickException(str(exc))
    click.echo(result.stats.as_lines())
    if record_path is not None:
        save_replay(result.replay, record_path)
        click.echo(f"replay = {record_path}")


@main.command()
@click.argument("replay_file", type=click.Path(exists=True))
def replay(replay_file) -> None:
    """Re-run a recorded episode, verifying per-step state hashes."""
    try:
        stats = replay_episode(load_replay(replay_file))
    except ReplayError as exc:
        raise click.ClickException(str(exc))
    click.echo(stats.as_lines())


@main.command()
@click.option("--config", "names", multiple=True,
              help="Configuration name; repeatable (default: all).")
@click.option("--steps", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--list", "list_only", is_flag=True,
              help="List available configuration names.")
def bench(names, steps, seed, list_only) -> None:
    """Benchmark mean step time over the first steps of an episode."""
    available = list(PRESETS) + list(FEATURE_CONFIGS)
    if list_only:
        click.echo("\n".join(available))
        return
    try:
        report = benchmark(list(names) or None, steps=steps, seed=seed)
    except KeyError as exc:
        raise click.ClickException(str(exc.args[0]))
    click.echo(report.as_lines())


@main.command()
@click.argument("replay_file", type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), required=True,
              help="Directory for the PPM frames.")
@click.option("--every", type=int, default=30, show_default=True,
              help="Steps between frames.")
@click.option("--size", type=int, default=400, show_default=True,
              help="Frame width and height in pixels.")
def render(replay_file, out_dir, every, size) -> None:
    """Render a recorded episode to PPM frames."""
    try:
        paths = render_replay_frames(load_replay(replay_file), out_dir,
                                     every=every, width=size, height=size)
    except ReplayError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"frames = {len(paths)}")
    click.echo(f"out = {out_dir}")


if __name__ == "__main__":
    sys.exit(main())
