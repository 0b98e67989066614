"""Extensible simulation framework: a Simulation owns body Groups, each Group
owns Modules whose callbacks implement all gameplay semantics.

Callback ordering is declaration order of groups, then modules within each
group; this ordering is part of the determinism contract.
"""

from __future__ import annotations

import random
from typing import Iterable, Optional, Type, TypeVar

from .physics import BodyDef, Contact, PhysicsError, World, WorldConfig


class FrameworkError(Exception):
    pass


class SimModule:
    """Base module: implements zero or more of the five callbacks. A module
    that overrides none of them changes no observable behavior."""

    group: "Group"

    def post_reset(self) -> None:
        pass

    def pre_step(self) -> None:
        pass

    def post_step(self) -> None:
        pass

    def post_spawn(self, handles: list[int]) -> None:
        pass

    def pre_despawn(self, handles: list[int]) -> None:
        pass


M = TypeVar("M", bound=SimModule)


class Group:
    """A collection of like bodies plus their behavior modules. Every live
    body in the group was created through this group's spawn."""

    def __init__(self, name: str, modules: Iterable[SimModule]):
        self.name = name
        self.modules: list[SimModule] = list(modules)
        self.bodies: list[int] = []
        self.sim: "Simulation" = None  # type: ignore[assignment]
        self._pending_despawn: list[int] = []
        for module in self.modules:
            module.group = self

    def spawn(self, defs: list[BodyDef]) -> list[int]:
        world = self.sim.world
        handles: list[int] = []
        try:
            for bdef in defs:
                handles.append(world.create_body(bdef))
        except PhysicsError:
            for handle in handles:
                world.destroy_body(handle)
            raise
        self.bodies.extend(handles)
        for handle in handles:
            self.sim._owner[handle] = self
        for module in self.modules:
            module.post_spawn(handles)
        return handles

    def despawn(self, handles: list[int]) -> None:
        for handle in handles:
            if handle not in self.bodies:
                raise FrameworkError(f"body {handle} not in group {self.name!r}")
        for module in self.modules:
            module.pre_despawn(list(handles))
        for handle in handles:
            self.bodies.remove(handle)
            del self.sim._owner[handle]
            self.sim.world.destroy_body(handle)

    def despawn_later(self, handles: Iterable[int]) -> None:
        """Queue a despawn; applied at the end of the post_step phase so
        modules never mutate the live set mid-iteration."""
        for handle in handles:
            if handle not in self._pending_despawn:
                self._pending_despawn.append(handle)

    def get_module(self, kind: Type[M]) -> Optional[M]:
        for module in self.modules:
            if isinstance(module, kind):
                return module
        return None

    def require_module(self, kind: Type[M]) -> M:
        module = self.get_module(kind)
        if module is None:
            raise FrameworkError(f"group {self.name!r} has no {kind.__name__}")
        return module


class Simulation:
    """Owns the physics world and the groups; features two operations,
    resetting and stepping. One simulation step runs the physics for
    `substeps` internal timesteps of size dt/substeps."""

    def __init__(
        self,
        groups: Iterable[Group],
        world_config: WorldConfig | None = None,
        dt: float = 1.0 / 60.0,
        substeps: int = 2,
    ):
        self.world = World(world_config)
        self.groups: list[Group] = list(groups)
        self.dt = dt
        self.substeps = substeps
        self.rng = random.Random(0)
        self.step_count = 0
        self.contacts: list[Contact] = []
        self._owner: dict[int, Group] = {}
        self._was_reset = False
        for group in self.groups:
            group.sim = self

    def group(self, name: str) -> Group:
        for group in self.groups:
            if group.name == name:
                return group
        raise FrameworkError(f"no group named {name!r}")

    def owner_of(self, handle: int) -> Optional[Group]:
        return self._owner.get(handle)

    def reset(self, seed: int) -> None:
        for group in self.groups:
            group.bodies.clear()
            group._pending_despawn.clear()
        self.world.clear()
        self._owner.clear()
        self.rng = random.Random(seed)
        self.step_count = 0
        self.contacts = []
        self._was_reset = True
        for group in self.groups:
            for module in group.modules:
                module.post_reset()

    def step(self) -> None:
        if not self._was_reset:
            raise FrameworkError("step before reset")
        for group in self.groups:
            for module in group.modules:
                module.pre_step()
        self.contacts = self.world.step(self.dt, self.substeps)
        for group in self.groups:
            for module in group.modules:
                module.post_step()
        for group in self.groups:
            if group._pending_despawn:
                pending = [h for h in group._pending_despawn if h in group.bodies]
                group._pending_despawn.clear()
                if pending:
                    group.despawn(pending)
        self.step_count += 1
