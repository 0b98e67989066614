"""Items as intangible sensor bodies, the abstract item contract, heals,
inventories, breakable boxes and their respawn items, and box ownership."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import Optional

from .framework import FrameworkError, Group, SimModule
from .mechanics import DamageCause, Health, Teams
from .modules import IndexBodies
from .physics import BodyDef, CircleShape, PolygonShape, Vec2

ITEM_RADIUS = 0.2


class ItemModule(SimModule):
    """An item module implements `use`; `drop` is provided concretely and
    spawns an item body in the module's group carrying a payload that is
    handed back to `use` when the item is consumed."""

    kind = "item"

    def __init__(self) -> None:
        self.payloads: dict[int, object] = {}

    def post_reset(self) -> None:
        self.payloads.clear()

    def pre_despawn(self, handles: list[int]) -> None:
        for handle in handles:
            self.payloads.pop(handle, None)

    def payload_of(self, handle: int) -> object:
        return self.payloads[handle]

    def use(self, user: int, payload: object) -> bool:
        raise NotImplementedError

    def drop(self, position: Vec2, payload: object) -> int:
        bdef = BodyDef(CircleShape(ITEM_RADIUS), position=position, is_sensor=True)
        handle = self.group.spawn([bdef])[0]
        self.payloads[handle] = payload
        return handle


class Heal(ItemModule):
    """Consumable that increases the user's health; the payload is a stable
    item id used to track the item across drops and pickups."""

    kind = "heal"

    def __init__(self, amount: int = 30):
        super().__init__()
        self.amount = amount
        self.consumed = 0

    def post_reset(self) -> None:
        super().post_reset()
        self.consumed = 0

    def use(self, user: int, payload: object) -> bool:
        user_group = self.group.sim.owner_of(user)
        assert user_group is not None
        user_group.require_module(Health).heal(user, self.amount)
        self.consumed += 1
        return True


@dataclass(frozen=True)
class BoxSpec:
    """Half-extents of one randomized box; preserved bit-exactly across
    break/respawn cycles. `owner` is set when the box is first broken."""

    spec_id: int
    half_w: float
    half_h: float
    owner: Optional[int] = None


def randomize_box_shapes(
    rng: random.Random, count: int, half_extent_range: tuple[float, float]
) -> list[BoxSpec]:
    lo, hi = half_extent_range
    return [
        BoxSpec(i, rng.uniform(lo, hi), rng.uniform(lo, hi)) for i in range(count)
    ]


def _box_def(spec: BoxSpec, position: Vec2, angle: float = 0.0) -> BodyDef:
    w, h = spec.half_w, spec.half_h
    verts = ((-w, -h), (w, -h), (w, h), (-w, h))
    return BodyDef(PolygonShape(verts), position=position, angle=angle, density=1.0)


class ObjectModule(SimModule):
    """Breakable boxes: when a box body despawns, a box item carrying its
    spec is dropped at the box center. With ownership on, only the entity
    that first broke a box may damage it after it has been re-placed."""

    def __init__(self, owned: bool = True, by_team: bool = False):
        self.owned = owned
        self.by_team = by_team
        self.spec_of: dict[int, BoxSpec] = {}
        self.item_module: "ObjectItemModule" = None  # type: ignore[assignment]
        self._filter_installed = False

    def post_reset(self) -> None:
        self.spec_of.clear()
        if not self._filter_installed:
            health = self.group.require_module(Health)
            health.add_filter(self._ownership_filter)
            health.on_death.append(self._record_breaker)
            self._filter_installed = True

    def pre_despawn(self, handles: list[int]) -> None:
        world = self.group.sim.world
        for handle in handles:
            spec = self.spec_of.pop(handle, None)
            if spec is not None:
                self.item_module.drop(world.position(handle), spec)

    def spawn_box(self, spec: BoxSpec, position: Vec2, angle: float = 0.0) -> int:
        handle = self.group.spawn([_box_def(spec, position, angle)])[0]
        self.spec_of[handle] = spec
        return handle

    def placed_specs(self) -> dict[int, int]:
        """spec_id -> live box handle."""
        return {spec.spec_id: handle for handle, spec in self.spec_of.items()}

    def _owner_key(self, cause: DamageCause) -> Optional[int]:
        if self.by_team and cause.team is not None:
            return cause.team
        return cause.attacker

    def _ownership_filter(self, target: int, cause: DamageCause) -> bool:
        if not self.owned or cause.kind != "melee":
            return False
        spec = self.spec_of.get(target)
        if spec is None or spec.owner is None:
            return False
        return self._owner_key(cause) != spec.owner

    def _record_breaker(self, target: int, cause: DamageCause) -> None:
        spec = self.spec_of.get(target)
        if spec is not None and spec.owner is None and cause.kind == "melee":
            self.spec_of[target] = replace(spec, owner=self._owner_key(cause))


class ObjectItemModule(ItemModule):
    """Item that re-places a broken box with its recorded shape at the
    user's position; fails (item retained) if the box would overlap another
    agent or box."""

    kind = "box"

    def __init__(self, object_module: ObjectModule):
        super().__init__()
        self.object_module = object_module
        object_module.item_module = self
        self.placed = 0

    def post_reset(self) -> None:
        super().post_reset()
        self.placed = 0

    def use(self, user: int, payload: object) -> bool:
        spec = payload
        assert isinstance(spec, BoxSpec)
        world = self.group.sim.world
        position = world.position(user)
        angle = world.angle(user)
        if self._blocked(position, spec, user):
            return False
        self.object_module.spawn_box(spec, position, angle)
        self.placed += 1
        return True

    def _blocked(self, position: Vec2, spec: BoxSpec, user: int) -> bool:
        world = self.group.sim.world
        reach = math.hypot(spec.half_w, spec.half_h)
        user_group = self.group.sim.owner_of(user)
        blockers = list(self.object_module.group.bodies)
        if user_group is not None:
            blockers += [h for h in user_group.bodies if h != user]
        for handle in blockers:
            x, y = world.position(handle)
            other = world.bodies[handle].bound_radius
            if math.hypot(x - position[0], y - position[1]) < reach + other:
                return True
        return False


@dataclass
class Slot:
    kind: str
    payload: object
    module: ItemModule


class Inventory(SimModule):
    """Per-agent fixed-length item slots in pickup order; only the last
    occupied slot is actionable."""

    def __init__(self, capacity: int = 4, give_radius: float = 1.5):
        self.capacity = capacity
        self.give_radius = give_radius
        self.slots: dict[int, list[Slot]] = {}

    def post_reset(self) -> None:
        self.slots.clear()

    def post_spawn(self, handles: list[int]) -> None:
        for handle in handles:
            self.slots[handle] = []

    def has_free_slot(self, agent: int) -> bool:
        return len(self.slots[agent]) < self.capacity

    def last_slot(self, agent: int) -> Optional[Slot]:
        items = self.slots.get(agent)
        return items[-1] if items else None

    def pickup(self, agent: int, module: ItemModule, item_handle: int) -> bool:
        if not self.has_free_slot(agent):
            return False
        payload = module.payload_of(item_handle)
        module.group.despawn([item_handle])
        self.slots[agent].append(Slot(module.kind, payload, module))
        return True

    def use_last(self, agent: int) -> bool:
        slot = self.last_slot(agent)
        if slot is None:
            return False
        if slot.module.use(agent, slot.payload):
            self.slots[agent].pop()
            return True
        return False

    def drop_last(self, agent: int) -> bool:
        slot = self.last_slot(agent)
        if slot is None:
            return False
        self.slots[agent].pop()
        x, y = self.group.sim.world.position(agent)
        slot.module.drop((x + 0.3, y), slot.payload)
        return True

    def give_last(self, agent: int) -> Optional[int]:
        """Transfer the last item to the nearest eligible agent within the
        give radius (teammates only in teams mode); None if no transfer."""
        slot = self.last_slot(agent)
        if slot is None:
            return None
        world = self.group.sim.world
        teams = self.group.get_module(Teams)
        indexer = self.group.get_module(IndexBodies)
        x, y = world.position(agent)
        best: Optional[tuple[float, int, int]] = None
        for other in self.group.bodies:
            if other == agent or not self.has_free_slot(other):
                continue
            if teams is not None and teams.team_of(other) != teams.team_of(agent):
                continue
            ox, oy = world.position(other)
            dist = math.hypot(ox - x, oy - y)
            if dist > self.give_radius:
                continue
            order = indexer.index_of(other) if indexer else other
            if best is None or (dist, order) < (best[0], best[1]):
                best = (dist, order, other)
        if best is None:
            return None
        receiver = best[2]
        self.slots[agent].pop()
        self.slots[receiver].append(slot)
        return receiver


class AutoPickup(SimModule):
    """Agents pick up items they are touching, if they have a free slot.
    When several agents touch the same item in one step, the lowest agent
    index wins."""

    def __init__(self, item_groups: list[Group]):
        self.item_groups = item_groups

    def post_step(self) -> None:
        world = self.group.sim.world
        inventory = self.group.require_module(Inventory)
        indexer = self.group.get_module(IndexBodies)
        item_of: dict[int, ItemModule] = {}
        for group in self.item_groups:
            module = next(m for m in group.modules if isinstance(m, ItemModule))
            for handle in group.bodies:
                item_of[handle] = module
        agents = set(self.group.bodies)
        candidates: dict[int, list[int]] = {}
        for a, b in world.touching():
            if a in agents and b in item_of:
                candidates.setdefault(b, []).append(a)
            elif b in agents and a in item_of:
                candidates.setdefault(a, []).append(b)
        for item_handle in sorted(candidates):
            takers = sorted(
                candidates[item_handle],
                key=lambda h: indexer.index_of(h) if indexer else h,
            )
            for agent in takers:
                if inventory.pickup(agent, item_of[item_handle], item_handle):
                    break


class DeathDrop(SimModule):
    """Dying agents drop their whole inventory, scattered uniformly in a
    small disk around their last position and clipped inside the room."""

    def __init__(self, scatter_radius: float = 1.0):
        self.scatter_radius = scatter_radius

    def pre_despawn(self, handles: list[int]) -> None:
        sim = self.group.sim
        inventory = self.group.require_module(Inventory)
        rng = sim.rng
        bound = sim.world.config.room_half_extent - ITEM_RADIUS
        for handle in handles:
            x, y = sim.world.position(handle)
            for slot in inventory.slots.get(handle, []):
                r = self.scatter_radius * math.sqrt(rng.random())
                phi = rng.uniform(0.0, 2.0 * math.pi)
                px = min(bound, max(-bound, x + r * math.cos(phi)))
                py = min(bound, max(-bound, y + r * math.sin(phi)))
                slot.module.drop((px, py), slot.payload)
            inventory.slots.pop(handle, None)
