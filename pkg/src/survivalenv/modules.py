"""General-purpose built-in modules: body indexing, death tracking/logging,
vision-cone cameras with occlusion, and per-body dynamic motors."""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np

from .framework import FrameworkError, SimModule
from .physics import CircleShape, PolygonShape

logger = logging.getLogger("survivalenv.deaths")


class IndexBodies(SimModule):
    """Assigns unique, never-reused integer indices to bodies spawned in the
    group; despawned entries become None instead of being removed."""

    def __init__(self) -> None:
        self.entries: list[Optional[int]] = []
        self._index_of: dict[int, int] = {}

    def post_reset(self) -> None:
        self.entries.clear()
        self._index_of.clear()

    def post_spawn(self, handles: list[int]) -> None:
        for handle in handles:
            self._index_of[handle] = len(self.entries)
            self.entries.append(handle)

    def pre_despawn(self, handles: list[int]) -> None:
        for handle in handles:
            self.entries[self._index_of[handle]] = None

    def index_of(self, handle: int) -> int:
        try:
            return self._index_of[handle]
        except KeyError:
            raise FrameworkError(f"body {handle} was never spawned here") from None

    def is_live(self, index: int) -> bool:
        return self.entries[index] is not None

    def handle_at(self, index: int) -> Optional[int]:
        return self.entries[index]


class TrackDeaths(SimModule):
    """Per-step record of the group's despawned bodies; cleared at the start
    of each step."""

    def __init__(self) -> None:
        self.despawned: list[int] = []

    def post_reset(self) -> None:
        self.despawned.clear()

    def pre_step(self) -> None:
        self.despawned.clear()

    def pre_despawn(self, handles: list[int]) -> None:
        self.despawned.extend(handles)


class LogDeaths(TrackDeaths):
    """TrackDeaths plus a diagnostics log line per despawn."""

    def pre_despawn(self, handles: list[int]) -> None:
        super().pre_despawn(handles)
        indexer = self.group.get_module(IndexBodies)
        for handle in handles:
            index = indexer.index_of(handle) if indexer else handle
            cause = "unknown"
            health = _find_health(self.group)
            if health is not None:
                recorded = health.death_cause(handle)
                if recorded is not None:
                    cause = recorded.kind
            logger.info(
                "death step=%d group=%s index=%d cause=%s",
                self.group.sim.step_count, self.group.name, index, cause,
            )


def _find_health(group):
    from .mechanics import Health

    return group.get_module(Health)


class DynamicMotors(SimModule):
    """Applies per-body (longitudinal, lateral, torque) direction controls in
    {-1,0,1}, scaled by fixed magnitudes; controls reset after each step."""

    def __init__(self, linear_force: float = 3.0, angular_torque: float = 0.3):
        self.linear_force = linear_force
        self.angular_torque = angular_torque
        self._controls: dict[int, tuple[int, int, int]] = {}

    def post_reset(self) -> None:
        self._controls.clear()

    def set_control(self, handle: int, controls: tuple[int, int, int]) -> None:
        if handle not in self.group.bodies:
            raise FrameworkError(f"body {handle} not in group {self.group.name!r}")
        if any(c not in (-1, 0, 1) for c in controls):
            raise ValueError(f"motor controls must be in {{-1,0,1}}, got {controls}")
        self._controls[handle] = controls

    def pre_step(self) -> None:
        world = self.group.sim.world
        for handle, (cx, cy, ct) in self._controls.items():
            if handle in self.group.bodies:
                world.apply_control(
                    handle,
                    (cx * self.linear_force, cy * self.linear_force),
                    ct * self.angular_torque,
                )
        self._controls.clear()


class Cameras(SimModule):
    """Vision-cone visibility with line-of-sight occlusion.

    A body is visible to an observer iff its center lies inside the
    observer's cone and range, and the center-to-center ray is not blocked
    by any solid body other than the observer and the target. Sensor bodies
    (intangible items) never occlude.
    """

    def __init__(self, half_angle: float = math.pi / 3.0, view_range: float = math.inf):
        self.half_angle = half_angle
        self.view_range = view_range
        self._visible: dict[int, set[int]] = {}

    def post_reset(self) -> None:
        self._visible.clear()

    def visible_set(self, observer: int) -> set[int]:
        if observer not in self.group.bodies:
            raise FrameworkError(f"observer {observer} not in group {self.group.name!r}")
        return self._visible.get(observer, set())

    def post_step(self) -> None:
        self._visible = self.compute_visibility()

    def compute_visibility(self) -> dict[int, set[int]]:
        sim = self.group.sim
        world = sim.world
        targets: list[int] = []
        for group in sim.groups:
            targets.extend(group.bodies)
        if not targets:
            return {obs: set() for obs in self.group.bodies}

        circ_handles: list[int] = []
        circ_centers: list[tuple[float, float]] = []
        circ_radii: list[float] = []
        poly_handles: list[int] = []
        poly_edges_p0: list[tuple[float, float]] = []
        poly_edges_p1: list[tuple[float, float]] = []
        for handle, body in world.bodies.items():
            if body.sensor:
                continue
            if isinstance(body.shape, CircleShape):
                circ_handles.append(handle)
                circ_centers.append((body.x, body.y))
                circ_radii.append(body.shape.radius)
            else:
                verts = body.world_vertices()
                # All solid polygons here are quads (walls, boxes).
                assert len(verts) == 4
                poly_handles.append(handle)
                for i in range(4):
                    poly_edges_p0.append(verts[i])
                    poly_edges_p1.append(verts[(i + 1) % 4])

        t_handles = np.array(targets, dtype=np.int64)
        t_pos = np.array([world.position(h) for h in targets])
        t_sensor = np.array([world.bodies[h].sensor for h in targets])
        t_is_circle = np.array(
            [isinstance(world.bodies[h].shape, CircleShape) for h in targets]
        )
        t_radius = np.array(
            [
                world.bodies[h].shape.radius
                if isinstance(world.bodies[h].shape, CircleShape) else 0.0
                for h in targets
            ]
        )
        c_handles = np.array(circ_handles, dtype=np.int64)
        c_centers = np.array(circ_centers).reshape(-1, 2)
        c_radii = np.array(circ_radii)
        p_handles = np.array(poly_handles, dtype=np.int64)
        e_p0 = np.array(poly_edges_p0).reshape(-1, 2)
        e_p1 = np.array(poly_edges_p1).reshape(-1, 2)

        observers = list(self.group.bodies)
        n_obs = len(observers)
        n_t = len(targets)
        o_handles = np.array(observers, dtype=np.int64)
        o_pos = np.array([world.position(h) for h in observers]).reshape(-1, 2)
        o_theta = np.array([world.angle(h) for h in observers])
        facing = np.stack([np.cos(o_theta), np.sin(o_theta)], axis=1)

        # One ray per (observer, target) pair, flattened.
        dx = (t_pos[:, 0][None, :] - o_pos[:, 0][:, None]).reshape(-1)
        dy = (t_pos[:, 1][None, :] - o_pos[:, 1][:, None]).reshape(-1)
        d = np.stack([dx, dy], axis=1)
        origins = np.repeat(o_pos, n_t, axis=0)
        dist = np.hypot(dx, dy)
        dot = (
            dx.reshape(n_obs, n_t) * facing[:, 0][:, None]
            + dy.reshape(n_obs, n_t) * facing[:, 1][:, None]
        ).reshape(-1)
        cos_half = math.cos(self.half_angle)
        in_cone = (dot >= cos_half * dist) | (dist < 1e-12)
        in_cone &= dist <= self.view_range
        in_cone &= (o_handles[:, None] != t_handles[None, :]).reshape(-1)

        # Occlusion rays only for the pairs that passed the cone test.
        idx = np.flatnonzero(in_cone)
        visible = np.zeros(n_obs * n_t, dtype=bool)
        if idx.size == 0:
            return {observer: set() for observer in observers}
        ray_obs = np.repeat(o_handles, n_t)[idx]
        ray_tgt = np.tile(t_handles, n_obs)[idx]
        frac_c = _ray_circle_fractions(origins[idx], d[idx], c_centers, c_radii)
        frac_p = _ray_edge_fractions(origins[idx], d[idx], e_p0, e_p1)
        frac_p = frac_p.reshape(-1, len(p_handles) if len(p_handles) else 0, 4)
        frac_p = frac_p.min(axis=2) if frac_p.size else frac_p.reshape(-1, 0)

        # Entry fraction into the target's own shape (1.0 for sensors),
        # read off before the target column is excluded.
        f_target = np.ones(idx.size)
        solid_circ = np.tile(t_is_circle & ~t_sensor, n_obs)[idx]
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.tile(t_radius, n_obs)[idx][solid_circ] / dist[idx][solid_circ]
        f_target[solid_circ] = np.maximum(0.0, 1.0 - ratio)
        solid_poly = np.tile(~t_is_circle & ~t_sensor, n_obs)[idx]
        if solid_poly.any():
            col = np.searchsorted(p_handles, ray_tgt[solid_poly])
            f_target[solid_poly] = np.minimum(frac_p[solid_poly, col], 1.0)

        # Exclude observer and target from the occluder set.
        if len(c_handles):
            frac_c[ray_obs[:, None] == c_handles[None, :]] = np.inf
            frac_c[ray_tgt[:, None] == c_handles[None, :]] = np.inf
        if len(p_handles):
            frac_p[ray_obs[:, None] == p_handles[None, :]] = np.inf
            frac_p[ray_tgt[:, None] == p_handles[None, :]] = np.inf
        min_occ = np.minimum(
            frac_c.min(axis=1, initial=np.inf),
            frac_p.min(axis=1, initial=np.inf),
        )

        visible[idx] = min_occ >= f_target
        visible = visible.reshape(n_obs, n_t)
        return {
            observer: set(int(h) for h in t_handles[visible[k]])
            for k, observer in enumerate(observers)
        }


def _ray_circle_fractions(
    origins: np.ndarray, d: np.ndarray, centers: np.ndarray, radii: np.ndarray
) -> np.ndarray:
    """Entry fraction of each ray (origins[i], origins[i]+d[i]) into each
    circle; np.inf where there is no intersection in [0, 1]."""
    n_rays = d.shape[0]
    n_circ = centers.shape[0]
    if n_circ == 0:
        return np.full((n_rays, 0), np.inf)
    # Component-wise 2D ops; broadcasting to (Nr, Nc, 2) is much slower.
    fx = origins[:, 0][:, None] - centers[:, 0][None, :]  # (Nr, Nc)
    fy = origins[:, 1][:, None] - centers[:, 1][None, :]
    dx = d[:, 0][:, None]
    dy = d[:, 1][:, None]
    a = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]  # (Nr,)
    b = 2.0 * (fx * dx + fy * dy)  # (Nr, Nc)
    c = fx * fx + fy * fy - (radii * radii)[None, :]  # (Nr, Nc)
    disc = b * b - 4.0 * a[:, None] * c
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (-b - np.sqrt(disc)) / (2.0 * a[:, None])
    out = np.where((disc >= 0.0) & (t >= 0.0) & (t <= 1.0), t, np.inf)
    out = np.where(c <= 0.0, 0.0, out)  # ray starts inside
    return out


def _ray_edge_fractions(
    origins: np.ndarray, d: np.ndarray, p0: np.ndarray, p1: np.ndarray
) -> np.ndarray:
    """Fraction along each ray of its crossing with each edge segment;
    np.inf where they do not cross."""
    n_rays = d.shape[0]
    n_edges = p0.shape[0]
    if n_edges == 0:
        return np.full((n_rays, 0), np.inf)
    # Component-wise 2D ops; broadcasting to (Nr, Ne, 2) is much slower.
    ex = (p1[:, 0] - p0[:, 0])[None, :]  # (1, Ne)
    ey = (p1[:, 1] - p0[:, 1])[None, :]
    dx = d[:, 0][:, None]  # (Nr, 1)
    dy = d[:, 1][:, None]
    wx = p0[:, 0][None, :] - origins[:, 0][:, None]  # (Nr, Ne)
    wy = p0[:, 1][None, :] - origins[:, 1][:, None]
    denom = dx * ey - dy * ex
    t_num = wx * ey - wy * ex
    u_num = wx * dy - wy * dx
    with np.errstate(invalid="ignore", divide="ignore"):
        t = t_num / denom
        u = u_num / denom
    valid = (np.abs(denom) > 1e-15) & (t >= 0.0) & (t <= 1.0) & (u >= 0.0) & (u <= 1.0)
    return np.where(valid, t, np.inf)
