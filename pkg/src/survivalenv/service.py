"""HTTP service wrapping the environment: make/reset/step/close plus a
native in-process rollout endpoint. This is the boundary out-of-process
clients (e.g. the TypeScript training binding) talk to."""

from __future__ import annotations

import json
import time
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import Response
from pydantic import BaseModel, Field

from .config import ConfigError, PRESETS, config_from_text, preset_config
from .env import (
    ACTION_SIZES, EnvError, SurvivalEnv, flatten_observation,
    observation_layout,
)


class MakeRequest(BaseModel):
    preset: Optional[str] = None
    config_text: Optional[str] = None


class BlockModel(BaseModel):
    name: str
    offset: int
    shape: list[int]


class SpaceDescriptor(BaseModel):
    num_agents: int
    teams: bool
    action_sizes: list[int]
    observation_size: int
    blocks: list[BlockModel]


class MakeResponse(BaseModel):
    env_id: int
    space: SpaceDescriptor


class ResetRequest(BaseModel):
    seed: int


class ObservationsResponse(BaseModel):
    observations: list[list[float]]


class StepRequest(BaseModel):
    actions: list[Optional[list[int]]]


class EventsModel(BaseModel):
    alive: list[int]
    died: list[int]
    kills: list[int]


class StatsModel(BaseModel):
    heals_consumed: list[int]
    boxes_placed: list[int]
    kills: list[int]
    returns: list[float]
    length: int


class StepResponse(BaseModel):
    observations: list[list[float]]
    rewards: list[float]
    done: bool
    state_hash: str  # u64 as string: JSON numbers are not 64-bit safe
    events: EventsModel
    stats: Optional[StatsModel] = None


class RolloutRequest(BaseModel):
    seed: int
    actions: list[list[Optional[list[int]]]] = Field(
        description="Per step, one action (or null) per agent index."
    )


class RolloutResponse(BaseModel):
    observations: list[list[list[float]]]
    rewards: list[list[float]]
    dones: list[bool]
    hashes: list[str]
    seconds_per_step: float


app = FastAPI(title="survivalenv service")

_envs: dict[int, SurvivalEnv] = {}
_next_id = 0


def _get_env(env_id: int) -> SurvivalEnv:
    env = _envs.get(env_id)
    if env is None:
        raise HTTPException(status_code=404, detail=f"no env {env_id}")
    return env


def _space(env: SurvivalEnv) -> SpaceDescriptor:
    layout = observation_layout(env)
    return SpaceDescriptor(
        num_agents=env.config.agents,
        teams=env.config.teams,
        action_sizes=list(ACTION_SIZES),
        observation_size=layout.total,
        blocks=[BlockModel(name=n, offset=o, shape=list(s))
                for n, o, s in layout.blocks],
    )


def _flat(env: SurvivalEnv, observations) -> list[list[float]]:
    return [flatten_observation(o).tolist() for o in observations]


@app.get("/presets")
def list_presets() -> dict:
    return {"presets": sorted(PRESETS)}


@app.post("/envs", response_model=MakeResponse)
def make_env(request: MakeRequest) -> MakeResponse:
    global _next_id
    try:
        if request.config_text is not None:
            config = config_from_text(request.config_text)
        else:
            config = preset_config(request.preset or "ffa-1")
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    env = SurvivalEnv(config)
    env_id = _next_id
    _next_id += 1
    _envs[env_id] = env
    return MakeResponse(env_id=env_id, space=_space(env))


@app.post("/envs/{env_id}/reset", response_model=ObservationsResponse)
def reset_env(env_id: int, request: ResetRequest) -> ObservationsResponse:
    env = _get_env(env_id)
    observations = env.reset(request.seed)
    return ObservationsResponse(observations=_flat(env, observations))


@app.post("/envs/{env_id}/step", response_model=StepResponse)
async def step_env(env_id: int, request: Request) -> Response:
    # async + hand-rolled parsing/serialization: the per-step hot path;
    # the threadpool hop and double pydantic validation of a sync endpoint
    # would cost more than the simulation step itself.
    env = _get_env(env_id)
    try:
        actions = (await request.json())["actions"]
    except (ValueError, KeyError, TypeError) as exc:
        raise HTTPException(status_code=422, detail=f"bad step request: {exc}")
    try:
        observations, rewards, done, info = env.step(actions)
    except EnvError as exc:
        raise HTTPException(status_code=409, detail=str(exc))
    except (TypeError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=f"bad actions: {exc}")
    events = info["events"]
    stats = env.stats
    # Hand-serialized: this is the per-step hot path and FastAPI's response
    # model validation would roughly double its latency.
    payload = {
        "observations": _flat(env, observations),
        "rewards": rewards,
        "done": done,
        "state_hash": str(info["state_hash"]),
        "events": {"alive": events.alive, "died": events.died,
                   "kills": events.kills},
        "stats": {
            "heals_consumed": stats.heals_consumed,
            "boxes_placed": stats.boxes_placed,
            "kills": stats.kills,
            "returns": stats.returns,
            "length": stats.length,
        } if done else None,
    }
    return Response(json.dumps(payload), media_type="application/json")


@app.post("/envs/{env_id}/rollout", response_model=RolloutResponse)
def rollout_env(env_id: int, request: RolloutRequest) -> RolloutResponse:
    """Run the given action sequence natively in-process; the reference for
    binding transparency and overhead comparisons."""
    env = _get_env(env_id)
    observations = env.reset(request.seed)
    all_obs: list[list[list[float]]] = []
    all_rewards: list[list[float]] = []
    dones: list[bool] = []
    hashes: list[str] = []
    start = time.perf_counter()
    steps = 0
    for per_agent in request.actions:
        if env.done:
            raise HTTPException(status_code=409, detail="episode ended early")
        try:
            observations, rewards, done, info = env.step(per_agent)
        except EnvError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        steps += 1
        all_obs.append(_flat(env, observations))
        all_rewards.append(rewards)
        dones.append(done)
        hashes.append(str(info["state_hash"]))
    elapsed = time.perf_counter() - start
    return RolloutResponse(
        observations=all_obs,
        rewards=all_rewards,
        dones=dones,
        hashes=hashes,
        seconds_per_step=elapsed / max(1, steps),
    )


@app.delete("/envs/{env_id}")
def close_env(env_id: int) -> dict:
    _get_env(env_id)
    del _envs[env_id]
    return {"closed": env_id}
