"""Agent-facing gameplay: health/damage with cause tracking, the shrinking
safe zone, melee attacks, teams, and grid-cell spawn placement."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .framework import FrameworkError, SimModule
from .physics import BodyDef, Vec2


@dataclass(frozen=True)
class DamageCause:
    kind: str  # "melee" | "zone" | "other"
    attacker: Optional[int] = None
    team: Optional[int] = None


class Health(SimModule):
    """Integer health per body, damage/heal interface with cause tracking,
    immunity filters and on_death callbacks. A body despawns at the end of
    the step in which its health reaches 0 or less, exactly once."""

    def __init__(self, initial: int = 100, max_health: Optional[int] = None):
        self.initial = initial
        self.max_health = max_health
        self.hp: dict[int, int] = {}
        self.filters: list[Callable[[int, DamageCause], bool]] = []
        self.on_death: list[Callable[[int, DamageCause], None]] = []
        self._death_causes: dict[int, DamageCause] = {}

    def post_reset(self) -> None:
        self.hp.clear()
        self._death_causes.clear()

    def post_spawn(self, handles: list[int]) -> None:
        for handle in handles:
            self.hp[handle] = self.initial

    def pre_despawn(self, handles: list[int]) -> None:
        for handle in handles:
            self.hp.pop(handle, None)

    def add_filter(self, predicate: Callable[[int, DamageCause], bool]) -> None:
        """predicate(target, cause) -> True makes the target immune."""
        self.filters.append(predicate)

    def health_of(self, handle: int) -> int:
        try:
            return self.hp[handle]
        except KeyError:
            raise FrameworkError(f"body {handle} has no health here") from None

    def is_alive(self, handle: int) -> bool:
        return self.hp.get(handle, 0) > 0

    def death_cause(self, handle: int) -> Optional[DamageCause]:
        return self._death_causes.get(handle)

    def damage(self, target: int, amount: int, cause: DamageCause) -> bool:
        if target not in self.hp:
            raise FrameworkError(f"body {target} has no health here")
        if self.hp[target] <= 0:
            return False
        for predicate in self.filters:
            if predicate(target, cause):
                return False
        self.hp[target] -= amount
        if self.hp[target] <= 0:
            self._death_causes[target] = cause
            self.group.despawn_later([target])
            for callback in self.on_death:
                callback(target, cause)
        return True

    def heal(self, target: int, amount: int) -> None:
        if target not in self.hp or self.hp[target] <= 0:
            raise FrameworkError(f"cannot heal dead body {target}")
        self.hp[target] += amount
        if self.max_health is not None and self.hp[target] > self.max_health:
            self.hp[target] = self.max_health


@dataclass(frozen=True)
class ZonePhase:
    stationary: bool
    c_from: Vec2
    r_from: float
    c_to: Vec2
    r_to: float
    duration: int


@dataclass
class ZoneParams:
    initial_radius: float = 8.0
    radius_decay: float = 0.55
    stationary_phases: int = 4
    stationary_steps: int = 300
    shrink_steps: int = 300
    damage_per_step: int = 1


def sample_zone_schedule(
    rng: random.Random, room_half_extent: float, params: ZoneParams
) -> list[ZonePhase]:
    """Alternating stationary / shrink-move phases, every circle fully inside
    the room, radii non-increasing, final radius exactly 0."""

    def sample_center(radius: float) -> Vec2:
        bound = room_half_extent - radius
        if bound < 0.0:
            raise ValueError("zone radius larger than the room")
        return (rng.uniform(-bound, bound), rng.uniform(-bound, bound))

    radii = [params.initial_radius * params.radius_decay ** i
             for i in range(params.stationary_phases)]
    centers = [sample_center(r) for r in radii]
    final_center = sample_center(0.0)
    schedule: list[ZonePhase] = []
    for i, (c, r) in enumerate(zip(centers, radii)):
        schedule.append(ZonePhase(True, c, r, c, r, params.stationary_steps))
        if i + 1 < len(radii):
            nxt_c, nxt_r = centers[i + 1], radii[i + 1]
        else:
            nxt_c, nxt_r = final_center, 0.0
        schedule.append(ZonePhase(False, c, r, nxt_c, nxt_r, params.shrink_steps))
    return schedule


class SafeZone(SimModule):
    """Circular safe zone following a fixed phase schedule; bodies strictly
    outside the current circle take constant damage each step."""

    def __init__(self, damage_per_step: int = 1):
        self.damage_per_step = damage_per_step
        self.schedule: list[ZonePhase] = []
        self.phase_index = 0
        self.steps_into_phase = 0

    def set_schedule(self, schedule: list[ZonePhase]) -> None:
        self.schedule = schedule
        self.phase_index = 0
        self.steps_into_phase = 0

    def current_circle(self) -> tuple[Vec2, float]:
        if not self.schedule:
            return ((0.0, 0.0), 0.0)
        if self.phase_index >= len(self.schedule):
            last = self.schedule[-1]
            return (last.c_to, last.r_to)
        phase = self.schedule[self.phase_index]
        if phase.stationary:
            return (phase.c_from, phase.r_from)
        k = self.steps_into_phase / phase.duration
        cx = phase.c_from[0] + (phase.c_to[0] - phase.c_from[0]) * k
        cy = phase.c_from[1] + (phase.c_to[1] - phase.c_from[1]) * k
        r = phase.r_from + (phase.r_to - phase.r_from) * k
        return ((cx, cy), r)

    def next_stationary(self) -> tuple[Vec2, float]:
        """Circle of the next stationary phase; (terminal center, 0) after
        the schedule runs out."""
        for phase in self.schedule[self.phase_index + 1:]:
            if phase.stationary:
                return (phase.c_from, phase.r_from)
        if self.schedule:
            last = self.schedule[-1]
            return (last.c_to, last.r_to)
        return ((0.0, 0.0), 0.0)

    def pre_step(self) -> None:
        health = self.group.require_module(Health)
        (cx, cy), r = self.current_circle()
        world = self.group.sim.world
        cause = DamageCause(kind="zone")
        for handle in self.group.bodies:
            if not health.is_alive(handle):
                continue
            x, y = world.position(handle)
            dx, dy = x - cx, y - cy
            if dx * dx + dy * dy > r * r:
                health.damage(handle, self.damage_per_step, cause)
        self._advance()

    def _advance(self) -> None:
        if self.phase_index >= len(self.schedule):
            return
        self.steps_into_phase += 1
        if self.steps_into_phase >= self.schedule[self.phase_index].duration:
            self.phase_index += 1
            self.steps_into_phase = 0


class Teams(SimModule):
    """Partition of the agents into teams; teammates are immune to each
    other's melee and the melee damage cause carries the attacker's team."""

    def __init__(self) -> None:
        self.team_of_handle: dict[int, int] = {}
        self._filter_installed = False

    def post_reset(self) -> None:
        self.team_of_handle.clear()
        if not self._filter_installed:
            self.group.require_module(Health).add_filter(self._teammate_immunity)
            self._filter_installed = True

    def assign(self, handle: int, team: int) -> None:
        self.team_of_handle[handle] = team

    def team_of(self, handle: int) -> int:
        return self.team_of_handle[handle]

    def teammates(self, handle: int) -> list[int]:
        team = self.team_of_handle[handle]
        return [
            h for h, t in self.team_of_handle.items() if t == team and h != handle
        ]

    def live_teams(self) -> set[int]:
        live = set(self.group.bodies)
        return {t for h, t in self.team_of_handle.items() if h in live}

    def _teammate_immunity(self, target: int, cause: DamageCause) -> bool:
        if cause.kind != "melee" or cause.team is None:
            return False
        return self.team_of_handle.get(target) == cause.team


@dataclass(frozen=True)
class MeleeHit:
    attacker: int
    victim: Optional[int]
    killed: bool
    segment: tuple[Vec2, Vec2]


class Melee(SimModule):
    """Close-range attack: a fixed-length segment from the agent perimeter
    along its facing; the nearest solid body on the segment is hit, and
    damaged if it has health. One hit per activation, with a cooldown."""

    def __init__(self, length: float = 1.0, damage: int = 20, cooldown: int = 10):
        self.length = length
        self.damage = damage
        self.cooldown = cooldown
        self._controls: set[int] = set()
        self._last_attack_step: dict[int, int] = {}
        self.attacks_this_step: list[MeleeHit] = []

    def post_reset(self) -> None:
        self._controls.clear()
        self._last_attack_step.clear()
        self.attacks_this_step = []

    def set_control(self, handle: int, attacking: bool) -> None:
        if attacking:
            self._controls.add(handle)
        else:
            self._controls.discard(handle)

    def pre_step(self) -> None:
        sim = self.group.sim
        world = sim.world
        health = self.group.require_module(Health)
        teams = self.group.get_module(Teams)
        self.attacks_this_step = []
        for attacker in sorted(self._controls):
            if attacker not in self.group.bodies or not health.is_alive(attacker):
                continue
            last = self._last_attack_step.get(attacker)
            if last is not None and sim.step_count - last < self.cooldown:
                continue
            self._last_attack_step[attacker] = sim.step_count
            hit = self._attack(attacker, world, teams)
            self.attacks_this_step.append(hit)
        self._controls.clear()

    def _attack(self, attacker: int, world, teams: Optional[Teams]) -> MeleeHit:
        x, y = world.position(attacker)
        theta = world.angle(attacker)
        radius = world.bodies[attacker].shape.radius
        fx, fy = math.cos(theta), math.sin(theta)
        start = (x + radius * fx, y + radius * fy)
        end = (start[0] + self.length * fx, start[1] + self.length * fy)

        def solid(handle: int) -> bool:
            return handle != attacker and not world.bodies[handle].sensor

        hit = world.raycast(start, end, solid)
        if hit is None:
            return MeleeHit(attacker, None, False, (start, end))
        victim_group = self.group.sim.owner_of(hit.body)
        if victim_group is None:
            return MeleeHit(attacker, None, False, (start, end))  # wall blocks
        victim_health = victim_group.get_module(Health)
        if victim_health is None or not victim_health.is_alive(hit.body):
            return MeleeHit(attacker, None, False, (start, end))
        team = teams.team_of(attacker) if teams else None
        cause = DamageCause(kind="melee", attacker=attacker, team=team)
        applied = victim_health.damage(hit.body, self.damage, cause)
        if not applied:
            return MeleeHit(attacker, None, False, (start, end))
        killed = not victim_health.is_alive(hit.body)
        return MeleeHit(attacker, hit.body, killed, (start, end))


class SpawnPlacer:
    """Divides a rectangular region into grid cells and hands out random
    unused cells; shared across the groups spawned in one reset."""

    def __init__(self, half_extent: float, cell_size: float):
        self.half_extent = half_extent
        self.cell_size = cell_size
        self.per_side = max(1, int((2.0 * half_extent) // cell_size))
        self._used: set[int] = set()

    def reset(self) -> None:
        self._used.clear()

    def place(self, rng: random.Random, count: int) -> list[Vec2]:
        free = [i for i in range(self.per_side * self.per_side) if i not in self._used]
        if count > len(free):
            raise ValueError(
                f"cannot place {count} bodies, only {len(free)} free cells"
            )
        chosen = rng.sample(free, count)
        self._used.update(chosen)
        points: list[Vec2] = []
        jitter = 0.25 * self.cell_size
        origin = -self.per_side * self.cell_size / 2.0
        for cell in chosen:
            row, col = divmod(cell, self.per_side)
            cx = origin + (col + 0.5) * self.cell_size
            cy = origin + (row + 0.5) * self.cell_size
            points.append(
                (cx + rng.uniform(-jitter, jitter), cy + rng.uniform(-jitter, jitter))
            )
        return points


class ResetSpawns(SimModule):
    """Spawns a fixed number of bodies through a shared placer on reset."""

    def __init__(
        self,
        placer: SpawnPlacer,
        count: int,
        make_def: Callable[[Vec2, random.Random, int], BodyDef],
    ):
        self.placer = placer
        self.count = count
        self.make_def = make_def

    def post_reset(self) -> None:
        rng = self.group.sim.rng
        points = self.placer.place(rng, self.count)
        defs = [self.make_def(p, rng, i) for i, p in enumerate(points)]
        self.group.spawn(defs)
