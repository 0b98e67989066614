"""The RL-facing environment: seeded reset/step, observation construction
with visibility masks, action decoding, rewards, termination, episode
statistics and per-step state hashes."""

from __future__ import annotations

import hashlib
import logging
import math
import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import VariantConfig
from .framework import Group, Simulation, SimModule
from .items import (
    AutoPickup, BoxSpec, DeathDrop, Heal, Inventory, ObjectItemModule,
    ObjectModule, randomize_box_shapes,
)
from .mechanics import (
    DamageCause, Health, Melee, ResetSpawns, SafeZone, SpawnPlacer, Teams,
    sample_zone_schedule,
)
from .modules import Cameras, DynamicMotors, IndexBodies, TrackDeaths
from .physics import BodyDef, CircleShape

logger = logging.getLogger("survivalenv.env")

ENTITY_TYPES = ("other", "heal", "box", "boxitem", "healslot", "boxslot")

Action = tuple[int, int, int, int, int, int]
ACTION_SIZES = (3, 3, 3, 2, 2, 2)


class EnvError(Exception):
    pass


@dataclass
class AgentObservation:
    x_self: np.ndarray
    x_zone: np.ndarray
    entities: dict[str, tuple[np.ndarray, np.ndarray]]  # type -> (rows, mask)


@dataclass
class StepEvents:
    alive: list[int]
    died: list[int]
    kills: list[int]


@dataclass
class EpisodeStats:
    heals_consumed: list[int]
    boxes_placed: list[int]
    kills: list[int]
    returns: list[float]
    length: int = 0

    @classmethod
    def zeros(cls, n: int) -> "EpisodeStats":
        return cls([0] * n, [0] * n, [0] * n, [0.0] * n)

    def as_lines(self) -> str:
        parts = [f"length = {self.length}"]
        for name in ("heals_consumed", "boxes_placed", "kills", "returns"):
            values = getattr(self, name)
            parts.append(f"{name} = {values}")
        return "\n".join(parts)


def validate_action(action: Sequence[int]) -> Action:
    if len(action) != 6:
        raise EnvError(f"action must have 6 components, got {len(action)}")
    out = tuple(int(a) for a in action)
    for value, size in zip(out, ACTION_SIZES):
        if not 0 <= value < size:
            raise EnvError(f"action component {value} out of range for size {size}")
    return out  # type: ignore[return-value]


class _SpawnHeals(SimModule):
    """Places the initial heal items; each carries a stable item id."""

    def __init__(self, placer: SpawnPlacer, count: int, heal: Heal):
        self.placer = placer
        self.count = count
        self.heal = heal

    def post_reset(self) -> None:
        rng = self.group.sim.rng
        for item_id, point in enumerate(self.placer.place(rng, self.count)):
            self.heal.drop(point, item_id)


class _SpawnBoxes(SimModule):
    """Randomizes box shapes each episode and places the initial boxes."""

    def __init__(
        self,
        placer: SpawnPlacer,
        count: int,
        objects: ObjectModule,
        half_extent_range: tuple[float, float],
    ):
        self.placer = placer
        self.count = count
        self.objects = objects
        self.half_extent_range = half_extent_range
        self.specs: list[BoxSpec] = []

    def post_reset(self) -> None:
        rng = self.group.sim.rng
        self.specs = randomize_box_shapes(rng, self.count, self.half_extent_range)
        points = self.placer.place(rng, self.count)
        for spec, point in zip(self.specs, points):
            self.objects.spawn_box(spec, point, rng.uniform(0.0, 2.0 * math.pi))


class SurvivalEnv:
    """Multi-agent environment over one variant configuration. Deterministic:
    (config, seed, action sequence) fully determines the episode."""

    def __init__(self, config: VariantConfig):
        config.validate()
        self.config = config
        self._build()
        self._episode_active = False
        self.done = True
        self._row_cache: Optional[dict] = None
        self._row_cache_key: Optional[tuple] = None

    def _build(self) -> None:
        cfg = self.config
        self.placer = SpawnPlacer(
            cfg.world.room_half_extent - 1.0, cfg.sim.spawn_cell_size
        )
        self.indexer = IndexBodies()
        self.motors = DynamicMotors(cfg.agent.motor_force, cfg.agent.motor_torque)
        self.health = Health(
            cfg.agent.initial_health,
            cfg.agent.max_health if cfg.agent.max_health > 0 else None,
        )
        self.teams: Optional[Teams] = Teams() if cfg.teams else None
        self.zone = SafeZone(cfg.zone.damage_per_step)
        self.melee = Melee(
            cfg.agent.melee_length, cfg.agent.melee_damage, cfg.agent.melee_cooldown
        )
        self.inventory = Inventory(cfg.items.inventory_capacity, cfg.items.give_radius)
        self.deaths = TrackDeaths()
        view_range = cfg.cameras.view_range
        self.cameras = Cameras(
            cfg.cameras.half_angle,
            math.inf if view_range < 0 else view_range,
        )

        self.heal_item = Heal(cfg.items.heal_amount)
        self.heal_indexer = IndexBodies()
        heals_group = Group(
            "heals",
            [self.heal_indexer, self.heal_item,
             _SpawnHeals(self.placer, cfg.heal_count, self.heal_item)],
        )

        self.objects = ObjectModule(owned=True, by_team=cfg.teams)
        self.box_health = Health(cfg.items.box_health)
        self.box_indexer = IndexBodies()
        self.box_spawner = _SpawnBoxes(
            self.placer, cfg.box_count, self.objects,
            (cfg.items.box_half_extent_min, cfg.items.box_half_extent_max),
        )
        boxes_group = Group(
            "boxes",
            [self.box_indexer, self.box_health, self.objects, self.box_spawner],
        )

        self.box_item = ObjectItemModule(self.objects)
        self.box_item_indexer = IndexBodies()
        boxitems_group = Group("boxitems", [self.box_item_indexer, self.box_item])

        def agent_def(point, rng, i):
            return BodyDef(
                CircleShape(cfg.agent.radius),
                position=point,
                angle=rng.uniform(0.0, 2.0 * math.pi),
                density=cfg.agent.density,
            )

        agent_modules: list[SimModule] = [
            self.indexer,
            self.motors,
            self.health,
        ]
        if self.teams is not None:
            agent_modules.append(self.teams)
        agent_modules += [
            self.zone,
            self.melee,
            self.inventory,
            AutoPickup([heals_group, boxitems_group]),
            DeathDrop(cfg.items.scatter_radius),
            self.deaths,
        ]
        if cfg.cameras.enabled:
            agent_modules.append(self.cameras)
        # Spawners run last so the state modules above are reset first.
        agent_modules.append(ResetSpawns(self.placer, cfg.agents, agent_def))
        self.agents_group = Group("agents", agent_modules)

        self.heals_group = heals_group
        self.boxes_group = boxes_group
        self.boxitems_group = boxitems_group
        self.sim = Simulation(
            [self.agents_group, heals_group, boxes_group, boxitems_group],
            world_config=cfg.world,
            dt=cfg.sim.dt,
            substeps=cfg.sim.substeps,
        )

    # -- episode lifecycle ---------------------------------------------------

    def reset(self, seed: int) -> list[AgentObservation]:
        cfg = self.config
        self.placer.reset()
        self.sim.reset(seed)
        self.zone.set_schedule(
            sample_zone_schedule(self.sim.rng, cfg.world.room_half_extent, cfg.zone)
        )
        self.agent_handles: list[int] = list(self.agents_group.bodies)
        if self.teams is not None:
            half = cfg.agents // 2
            for i, handle in enumerate(self.agent_handles):
                self.teams.assign(handle, 0 if i < half else 1)
        if cfg.cameras.enabled:
            self.cameras._visible = self.cameras.compute_visibility()
        self.done = False
        self._episode_active = True
        self._row_cache = None
        self.episode_step = 0
        self.stats = EpisodeStats.zeros(cfg.agents)
        self._died_ever = [False] * cfg.agents
        return [self.build_observation(i) for i in range(cfg.agents)]

    def agent_alive(self, i: int) -> bool:
        return self.agent_handles[i] in self.agents_group.bodies

    def live_agent_indices(self) -> list[int]:
        return [i for i in range(self.config.agents) if self.agent_alive(i)]

    def _teams_alive(self) -> set[int]:
        assert self.teams is not None
        half = self.config.agents // 2
        alive = set()
        for i in self.live_agent_indices():
            alive.add(0 if i < half else 1)
        return alive

    def team_of_index(self, i: int) -> int:
        return 0 if i < self.config.agents // 2 else 1

    def step(
        self, actions: Sequence[Optional[Sequence[int]]]
    ) -> tuple[list[AgentObservation], list[float], bool, dict]:
        if self.done:
            raise EnvError("episode is done; call reset")
        cfg = self.config
        if len(actions) != cfg.agents:
            raise EnvError(f"expected {cfg.agents} actions, got {len(actions)}")

        prev_teams_alive = self._teams_alive() if self.teams is not None else None
        for i, raw in enumerate(actions):
            if raw is None:
                continue
            action = validate_action(raw)
            if not self.agent_alive(i):
                logger.warning("ignoring action for dead agent %d", i)
                continue
            handle = self.agent_handles[i]
            ax, ay, atheta, atk, use, give = action
            self.motors.set_control(handle, (ax - 1, ay - 1, atheta - 1))
            if atk:
                self.melee.set_control(handle, True)
            if use:
                slot = self.inventory.last_slot(handle)
                if self.inventory.use_last(handle) and slot is not None:
                    if slot.kind == "heal":
                        self.stats.heals_consumed[i] += 1
                    elif slot.kind == "box":
                        self.stats.boxes_placed[i] += 1
            elif give:
                self.inventory.give_last(handle)

        self.sim.step()
        self.episode_step += 1

        # Events of this transition.
        alive = [1 if self.agent_alive(i) else 0 for i in range(cfg.agents)]
        died = [0] * cfg.agents
        kills = [0] * cfg.agents
        index_of = {h: i for i, h in enumerate(self.agent_handles)}
        for handle in self.deaths.despawned:
            i = index_of[handle]
            died[i] = 1
            self._died_ever[i] = True
            cause = self.health.death_cause(handle)
            if cause is not None and cause.kind == "melee" and cause.attacker is not None:
                attacker_index = index_of.get(cause.attacker)
                if attacker_index is not None:
                    kills[attacker_index] += 1
        events = StepEvents(alive, died, kills)

        rewards = self.compute_rewards(events, prev_teams_alive)
        for i in range(cfg.agents):
            self.stats.kills[i] += kills[i]
            self.stats.returns[i] += rewards[i]
        self.stats.length = self.episode_step

        self.done = self._check_termination()
        observations = [self.build_observation(i) for i in range(cfg.agents)]
        info = {
            "events": events,
            "stats": self.stats,
            "state_hash": self.state_hash(),
        }
        return observations, rewards, self.done, info

    def compute_rewards(
        self, events: StepEvents, prev_teams_alive: Optional[set[int]]
    ) -> list[float]:
        r = self.config.rewards
        if self.teams is None:
            return [
                events.alive[i] * r.r_alive
                + (1 - events.alive[i]) * r.r_dead
                + events.kills[i] * r.r_kill
                + events.died[i] * r.r_death
                for i in range(self.config.agents)
            ]
        assert prev_teams_alive is not None
        now_alive = self._teams_alive()
        team_rewards = {}
        for team in (0, 1):
            members = [
                i for i in range(self.config.agents) if self.team_of_index(i) == team
            ]
            t_alive = 1 if team in now_alive else 0
            t_died = 1 if (team in prev_teams_alive and team not in now_alive) else 0
            t_kills = sum(events.kills[i] for i in members)
            team_rewards[team] = (
                t_alive * r.r_alive + (1 - t_alive) * r.r_dead
                + t_kills * r.r_kill + t_died * r.r_death
            )
        return [team_rewards[self.team_of_index(i)] for i in range(self.config.agents)]

    def _check_termination(self) -> bool:
        if self.episode_step >= self.config.episode_step_limit():
            return True
        if self.teams is not None:
            live = len(self._teams_alive())
        else:
            live = len(self.live_agent_indices())
        if self.config.termination == "all-dead":
            return live == 0
        return live <= 1

    # -- observations --------------------------------------------------------

    def self_width(self) -> int:
        return 9 if self.teams is not None else 8

    def entity_layout(self) -> dict[str, tuple[int, int]]:
        """type -> (row count, row width)."""
        cfg = self.config
        return {
            "other": (cfg.agents - 1, self.self_width()),
            "heal": (cfg.heal_count, 2),
            "box": (cfg.box_count, 11),
            "boxitem": (cfg.box_count, 10),
            "healslot": (1, 2),
            "boxslot": (1, 10),
        }

    def _self_row(self, i: int) -> np.ndarray:
        handle = self.agent_handles[i]
        world = self.sim.world
        x, y = world.position(handle)
        vx, vy = world.velocity(handle)
        row = [float(i)]
        if self.teams is not None:
            row.append(float(self.team_of_index(i)))
        row += [
            float(self.health.health_of(handle)), x, y, world.angle(handle),
            vx, vy, world.angular_velocity(handle),
        ]
        return np.array(row)

    def _shared_rows(self) -> dict:
        """Entity rows are absolute (observer-independent), so they are
        computed once per step and shared across observers."""
        key = (id(self.sim), self.sim.step_count, self.episode_step)
        if self._row_cache is not None and self._row_cache_key == key:
            return self._row_cache
        world = self.sim.world
        (cx, cy), radius = self.zone.current_circle()
        (nx, ny), next_radius = self.zone.next_stationary()
        cache = {
            "x_zone": np.array([cx, cy, radius, nx, ny, next_radius]),
            "self": {
                j: self._self_row(j)
                for j in range(self.config.agents) if self.agent_alive(j)
            },
            "heal": [
                (item_handle, int(payload), np.array(world.position(item_handle)))
                for item_handle, payload in self.heal_item.payloads.items()
            ],
            "box": [
                (box_handle, spec.spec_id, self._box_row(box_handle, spec))
                for box_handle, spec in self.objects.spec_of.items()
            ],
            "boxitem": [
                (
                    item_handle,
                    payload.spec_id,
                    np.concatenate(
                        [_spec_vertices(payload), world.position(item_handle)]
                    ),
                )
                for item_handle, payload in self.box_item.payloads.items()
            ],
        }
        self._row_cache = cache
        self._row_cache_key = key
        return cache

    def build_observation(self, i: int) -> AgentObservation:
        layout = self.entity_layout()
        entities = {
            kind: (np.zeros((n, w)), np.zeros(n)) for kind, (n, w) in layout.items()
        }
        if not self.agent_alive(i):
            return AgentObservation(
                np.zeros(self.self_width()), np.zeros(6), entities
            )
        handle = self.agent_handles[i]
        world = self.sim.world
        if self.config.cameras.enabled:
            visible = self.cameras.visible_set(handle)
        else:
            visible = None  # omniscient

        def sees(target: int) -> bool:
            return visible is None or target in visible

        shared = self._shared_rows()
        x_zone = shared["x_zone"]

        rows, mask = entities["other"]
        row_index = 0
        for j in range(self.config.agents):
            if j == i:
                continue
            if self.agent_alive(j) and sees(self.agent_handles[j]):
                rows[row_index] = shared["self"][j]
                mask[row_index] = 1.0
            row_index += 1

        rows, mask = entities["heal"]
        for item_handle, item_id, row in shared["heal"]:
            if sees(item_handle):
                rows[item_id] = row
                mask[item_id] = 1.0

        rows, mask = entities["box"]
        for box_handle, spec_id, row in shared["box"]:
            if sees(box_handle):
                rows[spec_id] = row
                mask[spec_id] = 1.0

        rows, mask = entities["boxitem"]
        for item_handle, spec_id, row in shared["boxitem"]:
            if sees(item_handle):
                rows[spec_id] = row
                mask[spec_id] = 1.0

        slot = self.inventory.last_slot(handle)
        if slot is not None:
            position = np.array(world.position(handle))
            if slot.kind == "heal":
                rows, mask = entities["healslot"]
                rows[0] = position
                mask[0] = 1.0
            elif slot.kind == "box":
                spec = slot.payload
                assert isinstance(spec, BoxSpec)
                rows, mask = entities["boxslot"]
                rows[0] = np.concatenate([_spec_vertices(spec), position])
                mask[0] = 1.0

        return AgentObservation(shared["self"][i].copy(), x_zone.copy(), entities)

    def _box_row(self, box_handle: int, spec: BoxSpec) -> np.ndarray:
        world = self.sim.world
        return np.concatenate(
            [
                _spec_vertices(spec),
                world.position(box_handle),
                [world.angle(box_handle)],
            ]
        )

    # -- state hash ----------------------------------------------------------

    def state_hash(self) -> int:
        """64-bit digest of the full mutable episode state."""
        h = hashlib.blake2b(digest_size=8)
        h.update(struct.pack("<iii", self.sim.step_count, self.episode_step,
                             1 if self.done else 0))
        for handle in sorted(self.sim.world.bodies):
            b = self.sim.world.bodies[handle]
            h.update(struct.pack("<i6d", handle, b.x, b.y, b.angle, b.vx, b.vy, b.w))
        for i, handle in enumerate(self.agent_handles):
            hp = self.health.hp.get(handle, 0)
            h.update(struct.pack("<ii", i, hp))
            for slot in self.inventory.slots.get(handle, []):
                h.update(slot.kind.encode())
                if isinstance(slot.payload, BoxSpec):
                    h.update(struct.pack("<idd", slot.payload.spec_id,
                                         slot.payload.half_w, slot.payload.half_h))
                else:
                    h.update(struct.pack("<i", int(slot.payload)))
        h.update(struct.pack("<ii", self.zone.phase_index, self.zone.steps_into_phase))
        return int.from_bytes(h.digest(), "little")


def _spec_vertices(spec: BoxSpec) -> np.ndarray:
    w, h = spec.half_w, spec.half_h
    return np.array([-w, -h, w, -h, w, h, -w, h])


# -- flattening ---------------------------------------------------------------


@dataclass
class LayoutDescriptor:
    """Offsets and shapes of every block in the flat observation vector."""

    self_width: int
    blocks: list[tuple[str, int, tuple[int, ...]]]  # (name, offset, shape)
    total: int

    def block(self, name: str) -> tuple[int, tuple[int, ...]]:
        for block_name, offset, shape in self.blocks:
            if block_name == name:
                return offset, shape
        raise KeyError(name)


def observation_layout(env: SurvivalEnv) -> LayoutDescriptor:
    blocks: list[tuple[str, int, tuple[int, ...]]] = []
    offset = 0

    def add(name: str, shape: tuple[int, ...]) -> None:
        nonlocal offset
        blocks.append((name, offset, shape))
        offset += int(np.prod(shape)) if shape else 0

    width = env.self_width()
    add("x_self", (width,))
    add("x_zone", (6,))
    for kind, (n, w) in env.entity_layout().items():
        add(f"{kind}.rows", (n, w))
        add(f"{kind}.mask", (n,))
    return LayoutDescriptor(width, blocks, offset)


def flatten_observation(obs: AgentObservation) -> np.ndarray:
    parts = [obs.x_self, obs.x_zone]
    for kind in ENTITY_TYPES:
        rows, mask = obs.entities[kind]
        parts.append(rows.reshape(-1))
        parts.append(mask)
    return np.concatenate(parts)


def unflatten_observation(
    flat: np.ndarray, layout: LayoutDescriptor
) -> AgentObservation:
    def take(name: str) -> np.ndarray:
        offset, shape = layout.block(name)
        size = int(np.prod(shape)) if shape else 0
        return flat[offset:offset + size].reshape(shape)

    entities = {
        kind: (take(f"{kind}.rows"), take(f"{kind}.mask")) for kind in ENTITY_TYPES
    }
    return AgentObservation(take("x_self"), take("x_zone"), entities)


# -- vectorized view ----------------------------------------------------------


class VectorizedEnv:
    """Presents the N agents of one environment as N parallel single-agent
    slots; the whole episode auto-resets when done. Dead agents' slots carry
    zero observations until the episode ends."""

    def __init__(self, env: SurvivalEnv, seed: int = 0):
        self.env = env
        self.layout = observation_layout(env)
        self.num_slots = env.config.agents
        self._base_seed = seed
        self._episode = 0

    def _stack(self, observations: list[AgentObservation]) -> np.ndarray:
        return np.stack([flatten_observation(o) for o in observations])

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        if seed is not None:
            self._base_seed = seed
            self._episode = 0
        observations = self.env.reset(self._base_seed + self._episode)
        return self._stack(observations)

    def step(
        self, actions: Sequence[Sequence[int]]
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict]:
        acts: list[Optional[Sequence[int]]] = [
            a if self.env.agent_alive(i) else None for i, a in enumerate(actions)
        ]
        observations, rewards, done, info = self.env.step(acts)
        obs = self._stack(observations)
        if done:
            self._episode += 1
            obs = self._stack(self.env.reset(self._base_seed + self._episode))
        return (
            obs,
            np.array(rewards),
            np.full(self.num_slots, done),
            info,
        )
