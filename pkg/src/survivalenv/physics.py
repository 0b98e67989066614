"""Minimal deterministic 2D rigid-body physics: circles, convex polygons,
fixed-timestep integration, impulse collision response, contact events and
segment raycasts.

Coordinates are world units, angles in radians, CCW positive. The world is
single-threaded; many worlds may run in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

Vec2 = tuple[float, float]

# Collision tuning. Restitution is zero (survival arena, no bouncing).
_FRICTION = 0.4
_POS_CORRECT = 0.4
_POS_SLOP = 0.005


class PhysicsError(Exception):
    """Invalid shape definitions or stale body handles."""


@dataclass(frozen=True)
class CircleShape:
    radius: float


@dataclass(frozen=True)
class PolygonShape:
    """Convex polygon, vertices CCW in the body frame."""

    vertices: tuple[Vec2, ...]


Shape = CircleShape | PolygonShape


@dataclass
class BodyDef:
    shape: Shape
    position: Vec2 = (0.0, 0.0)
    angle: float = 0.0
    linear_velocity: Vec2 = (0.0, 0.0)
    angular_velocity: float = 0.0
    density: float = 1.0
    is_sensor: bool = False
    is_static: bool = False


@dataclass(frozen=True)
class Contact:
    body_a: int
    body_b: int
    began: bool


@dataclass(frozen=True)
class RaycastHit:
    body: int
    point: Vec2
    fraction: float


def _cross(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def _poly_area_centroid_inertia(verts: tuple[Vec2, ...]) -> tuple[float, Vec2, float]:
    """Area, centroid and second moment of area about the body origin."""
    area = 0.0
    cx = cy = 0.0
    inertia = 0.0
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        cr = _cross(x0, y0, x1, y1)
        area += cr
        cx += (x0 + x1) * cr
        cy += (y0 + y1) * cr
        inertia += cr * (x0 * x0 + x0 * x1 + x1 * x1 + y0 * y0 + y0 * y1 + y1 * y1)
    area *= 0.5
    if area <= 0.0:
        raise PhysicsError("invalid shape: polygon must be CCW with positive area")
    cx /= 6.0 * area
    cy /= 6.0 * area
    inertia /= 12.0
    return area, (cx, cy), inertia


def _validate_shape(shape: Shape) -> None:
    if isinstance(shape, CircleShape):
        if shape.radius <= 0.0:
            raise PhysicsError("invalid shape: circle radius must be > 0")
        return
    verts = shape.vertices
    if not 3 <= len(verts) <= 8:
        raise PhysicsError("invalid shape: polygon needs 3-8 vertices")
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        x2, y2 = verts[(i + 2) % n]
        if _cross(x1 - x0, y1 - y0, x2 - x1, y2 - y1) <= 0.0:
            raise PhysicsError("invalid shape: polygon must be convex and CCW")


class Body:
    __slots__ = (
        "handle", "shape", "x", "y", "angle", "vx", "vy", "w",
        "inv_mass", "inv_inertia", "sensor", "static", "fx", "fy", "torque",
        "bound_radius", "_verts", "aabb",
    )

    def __init__(self, handle: int, bdef: BodyDef):
        self.handle = handle
        self.shape = bdef.shape
        self.x, self.y = float(bdef.position[0]), float(bdef.position[1])
        self.angle = float(bdef.angle)
        self.vx, self.vy = float(bdef.linear_velocity[0]), float(bdef.linear_velocity[1])
        self.w = float(bdef.angular_velocity)
        self.sensor = bdef.is_sensor
        self.static = bdef.is_static
        self.fx = self.fy = self.torque = 0.0
        if isinstance(bdef.shape, CircleShape):
            r = bdef.shape.radius
            mass = bdef.density * math.pi * r * r
            inertia = 0.5 * mass * r * r
            self.bound_radius = r
        else:
            area, _, second = _poly_area_centroid_inertia(bdef.shape.vertices)
            mass = bdef.density * area
            inertia = bdef.density * second
            self.bound_radius = max(math.hypot(vx, vy) for vx, vy in bdef.shape.vertices)
        if bdef.is_static or bdef.is_sensor:
            self.inv_mass = 0.0
            self.inv_inertia = 0.0
        else:
            self.inv_mass = 1.0 / mass
            self.inv_inertia = 1.0 / inertia if inertia > 0.0 else 0.0
        self._verts: Optional[list[Vec2]] = None
        self.aabb = (0.0, 0.0, 0.0, 0.0)

    def world_vertices(self) -> list[Vec2]:
        assert isinstance(self.shape, PolygonShape)
        c, s = math.cos(self.angle), math.sin(self.angle)
        return [
            (self.x + c * vx - s * vy, self.y + s * vx + c * vy)
            for vx, vy in self.shape.vertices
        ]

    def update_cache(self) -> None:
        """Refresh cached world vertices and AABB; static bodies keep their
        first computation."""
        if self.static and self._verts is not None:
            return
        if isinstance(self.shape, CircleShape):
            r = self.shape.radius
            self.aabb = (self.x - r, self.y - r, self.x + r, self.y + r)
        else:
            verts = self.world_vertices()
            self._verts = verts
            xs = [v[0] for v in verts]
            ys = [v[1] for v in verts]
            self.aabb = (min(xs), min(ys), max(xs), max(ys))


@dataclass
class WorldConfig:
    """Geometric and numeric defaults; the room is a square centered on the
    origin with four static walls just outside the interior."""

    room_half_extent: float = 10.0
    wall_thickness: float = 0.5
    linear_damping: float = 2.0
    angular_damping: float = 3.0
    max_speed: float = 15.0


class World:
    """The physics world: bodies, walls, stepping and queries."""

    def __init__(self, config: WorldConfig | None = None):
        self.config = config or WorldConfig()
        self.bodies: dict[int, Body] = {}
        self._next_handle = 0
        self._touching: set[tuple[int, int]] = set()
        self.wall_handles: list[int] = []
        self._make_walls()

    def _make_walls(self) -> None:
        h = self.config.room_half_extent
        t = self.config.wall_thickness
        half = t / 2.0
        centers = [(0.0, h + half), (0.0, -h - half), (h + half, 0.0), (-h - half, 0.0)]
        sizes = [(h + t, half), (h + t, half), (half, h), (half, h)]
        for (cx, cy), (hw, hh) in zip(centers, sizes):
            verts = ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh))
            handle = self.create_body(
                BodyDef(PolygonShape(verts), position=(cx, cy), is_static=True)
            )
            self.wall_handles.append(handle)

    def clear(self) -> None:
        """Destroy every body except the walls."""
        for handle in list(self.bodies):
            if handle not in self.wall_handles:
                del self.bodies[handle]
        # Reset handle allocation so episode state is independent of how
        # many episodes ran before on this world.
        self._next_handle = max(self.wall_handles, default=-1) + 1
        self._touching = {
            p for p in self._touching if p[0] in self.bodies and p[1] in self.bodies
        }

    def create_body(self, bdef: BodyDef) -> int:
        _validate_shape(bdef.shape)
        if not bdef.is_static and bdef.density <= 0.0:
            raise PhysicsError("invalid shape: density must be > 0")
        handle = self._next_handle
        self._next_handle += 1
        self.bodies[handle] = Body(handle, bdef)
        return handle

    def destroy_body(self, handle: int) -> None:
        self._body(handle)
        del self.bodies[handle]
        self._touching = {p for p in self._touching if handle not in p}

    def _body(self, handle: int) -> Body:
        body = self.bodies.get(handle)
        if body is None:
            raise PhysicsError(f"stale body handle {handle}")
        return body

    # -- kinematic accessors -------------------------------------------------

    def position(self, handle: int) -> Vec2:
        b = self._body(handle)
        return (b.x, b.y)

    def angle(self, handle: int) -> float:
        return self._body(handle).angle

    def velocity(self, handle: int) -> Vec2:
        b = self._body(handle)
        return (b.vx, b.vy)

    def angular_velocity(self, handle: int) -> float:
        return self._body(handle).w

    def set_transform(self, handle: int, position: Vec2, angle: float) -> None:
        b = self._body(handle)
        b.x, b.y = position
        b.angle = angle

    def apply_control(self, handle: int, force_body: Vec2, torque: float) -> None:
        """Accumulate a body-frame force and a torque for the next step."""
        b = self._body(handle)
        c, s = math.cos(b.angle), math.sin(b.angle)
        fx, fy = force_body
        b.fx += c * fx - s * fy
        b.fy += s * fx + c * fy
        b.torque += torque

    # -- stepping ------------------------------------------------------------

    def step(self, dt: float, substeps: int = 1) -> list[Contact]:
        if dt <= 0.0 or substeps < 1:
            raise PhysicsError("dt must be > 0 and substeps >= 1")
        cfg = self.config
        h = dt / substeps
        contacts: list[Contact] = []
        for _ in range(substeps):
            self._integrate(h, cfg)
            self._collide(contacts)
        for body in self.bodies.values():
            body.fx = body.fy = body.torque = 0.0
        return contacts

    def _integrate(self, h: float, cfg: WorldConfig) -> None:
        lin_k = 1.0 / (1.0 + cfg.linear_damping * h)
        ang_k = 1.0 / (1.0 + cfg.angular_damping * h)
        max_sq = cfg.max_speed * cfg.max_speed
        for body in self.bodies.values():
            if body.inv_mass == 0.0:
                continue
            body.vx = (body.vx + body.fx * body.inv_mass * h) * lin_k
            body.vy = (body.vy + body.fy * body.inv_mass * h) * lin_k
            body.w = (body.w + body.torque * body.inv_inertia * h) * ang_k
            speed_sq = body.vx * body.vx + body.vy * body.vy
            if speed_sq > max_sq:
                scale = cfg.max_speed / math.sqrt(speed_sq)
                body.vx *= scale
                body.vy *= scale
            body.x += body.vx * h
            body.y += body.vy * h
            body.angle += body.w * h

    def _collide(self, contacts: list[Contact]) -> None:
        bodies = list(self.bodies.values())
        n = len(bodies)
        for body in bodies:
            body.update_cache()
        now_touching: set[tuple[int, int]] = set()
        # Vectorized AABB broadphase; narrow phase only on overlapping pairs.
        aabbs = np.array([body.aabb for body in bodies]).reshape(n, 4)
        static = np.array([body.static for body in bodies])
        sensor = np.array([body.sensor for body in bodies])
        candidates = (
            (aabbs[:, 0][:, None] <= aabbs[:, 2][None, :])
            & (aabbs[:, 0][None, :] <= aabbs[:, 2][:, None])
            & (aabbs[:, 1][:, None] <= aabbs[:, 3][None, :])
            & (aabbs[:, 1][None, :] <= aabbs[:, 3][:, None])
        )
        candidates &= ~(static[:, None] & static[None, :])
        candidates &= ~(sensor[:, None] & sensor[None, :])
        candidates &= np.tri(n, k=-1, dtype=bool).T  # keep i < j only
        for i, j in zip(*np.nonzero(candidates)):
            a = bodies[i]
            b = bodies[j]
            manifold = _collide_pair(a, b)
            if manifold is None:
                continue
            now_touching.add((a.handle, b.handle))
            if not (a.sensor or b.sensor):
                _resolve(a, b, manifold)
        for pair in sorted(now_touching - self._touching):
            contacts.append(Contact(pair[0], pair[1], began=True))
        for pair in sorted(self._touching - now_touching):
            if pair[0] in self.bodies and pair[1] in self.bodies:
                contacts.append(Contact(pair[0], pair[1], began=False))
        self._touching = now_touching

    def touching(self) -> set[tuple[int, int]]:
        """Pairs of bodies currently overlapping (after the last step)."""
        return set(self._touching)

    # -- queries -------------------------------------------------------------

    def raycast(
        self,
        start: Vec2,
        end: Vec2,
        body_filter: Optional[Callable[[int], bool]] = None,
    ) -> Optional[RaycastHit]:
        """Nearest filtered intersection along the segment, if any."""
        if start == end:
            raise PhysicsError("raycast: degenerate segment")
        best: Optional[RaycastHit] = None
        for handle, body in self.bodies.items():
            if body_filter is not None and not body_filter(handle):
                continue
            frac = _segment_body_fraction(start, end, body)
            if frac is None:
                continue
            if best is None or frac < best.fraction:
                px = start[0] + (end[0] - start[0]) * frac
                py = start[1] + (end[1] - start[1]) * frac
                best = RaycastHit(handle, (px, py), frac)
        return best


# -- narrow phase ------------------------------------------------------------


@dataclass
class _Manifold:
    nx: float
    ny: float
    penetration: float
    px: float
    py: float


def _collide_pair(a: Body, b: Body) -> Optional[_Manifold]:
    a_circle = isinstance(a.shape, CircleShape)
    b_circle = isinstance(b.shape, CircleShape)
    if a_circle and b_circle:
        return _circle_circle(a, b)
    if a_circle:
        m = _circle_polygon(a, b)
        return m
    if b_circle:
        m = _circle_polygon(b, a)
        if m is not None:
            m.nx, m.ny = -m.nx, -m.ny
        return m
    return _polygon_polygon(a, b)


def _circle_circle(a: Body, b: Body) -> Optional[_Manifold]:
    ra = a.shape.radius  # type: ignore[union-attr]
    rb = b.shape.radius  # type: ignore[union-attr]
    dx = b.x - a.x
    dy = b.y - a.y
    dist_sq = dx * dx + dy * dy
    reach = ra + rb
    if dist_sq >= reach * reach:
        return None
    dist = math.sqrt(dist_sq)
    if dist > 1e-12:
        nx, ny = dx / dist, dy / dist
    else:
        nx, ny = 1.0, 0.0
    px = a.x + nx * ra
    py = a.y + ny * ra
    return _Manifold(nx, ny, reach - dist, px, py)


def _circle_polygon(circle: Body, poly: Body) -> Optional[_Manifold]:
    """Normal points from the circle towards the polygon."""
    r = circle.shape.radius  # type: ignore[union-attr]
    verts = poly._verts if poly._verts is not None else poly.world_vertices()
    n = len(verts)
    cx, cy = circle.x, circle.y
    best_sep = -math.inf
    best_edge = 0
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        length = math.hypot(ex, ey)
        nx, ny = ey / length, -ex / length  # outward normal of CCW polygon
        sep = (cx - x0) * nx + (cy - y0) * ny
        if sep > best_sep:
            best_sep = sep
            best_edge = i
        if sep >= r:
            return None
    x0, y0 = verts[best_edge]
    x1, y1 = verts[(best_edge + 1) % n]
    if best_sep < 1e-12:
        # Center inside the polygon: push out along the least-penetrated face.
        ex, ey = x1 - x0, y1 - y0
        length = math.hypot(ex, ey)
        nx, ny = ey / length, -ex / length
        return _Manifold(-nx, -ny, r - best_sep, cx, cy)
    ex, ey = x1 - x0, y1 - y0
    t = ((cx - x0) * ex + (cy - y0) * ey) / (ex * ex + ey * ey)
    t = min(1.0, max(0.0, t))
    qx, qy = x0 + ex * t, y0 + ey * t
    dx, dy = qx - cx, qy - cy
    dist_sq = dx * dx + dy * dy
    if dist_sq >= r * r:
        return None
    dist = math.sqrt(dist_sq)
    nx, ny = (dx / dist, dy / dist) if dist > 1e-12 else (1.0, 0.0)
    return _Manifold(nx, ny, r - dist, qx, qy)


def _poly_interval(verts: list[Vec2], nx: float, ny: float) -> tuple[float, float]:
    lo = hi = verts[0][0] * nx + verts[0][1] * ny
    for vx, vy in verts[1:]:
        p = vx * nx + vy * ny
        if p < lo:
            lo = p
        elif p > hi:
            hi = p
    return lo, hi


def _polygon_polygon(a: Body, b: Body) -> Optional[_Manifold]:
    va = a._verts if a._verts is not None else a.world_vertices()
    vb = b._verts if b._verts is not None else b.world_vertices()
    best_pen = math.inf
    best_axis = (1.0, 0.0)
    for verts, other in ((va, vb), (vb, va)):
        n = len(verts)
        flip = verts is vb
        for i in range(n):
            x0, y0 = verts[i]
            x1, y1 = verts[(i + 1) % n]
            ex, ey = x1 - x0, y1 - y0
            length = math.hypot(ex, ey)
            nx, ny = ey / length, -ex / length
            lo_a, hi_a = _poly_interval(verts, nx, ny)
            lo_b, hi_b = _poly_interval(other, nx, ny)
            pen = hi_a - lo_b
            if pen <= 0.0:
                return None
            if pen < best_pen:
                best_pen = pen
                best_axis = (-nx, -ny) if flip else (nx, ny)
    nx, ny = best_axis  # points from a towards b
    # Contact point: mean of the incident polygon's most-penetrating vertices.
    ref, inc = (va, vb)
    lo_ref, hi_ref = _poly_interval(ref, nx, ny)
    deepest = [v for v in inc if v[0] * nx + v[1] * ny <= hi_ref]
    if not deepest:
        deepest = [min(inc, key=lambda v: v[0] * nx + v[1] * ny)]
    px = sum(v[0] for v in deepest) / len(deepest)
    py = sum(v[1] for v in deepest) / len(deepest)
    return _Manifold(nx, ny, best_pen, px, py)


def _resolve(a: Body, b: Body, m: _Manifold) -> None:
    inv_mass = a.inv_mass + b.inv_mass
    if inv_mass == 0.0:
        return
    rax, ray = m.px - a.x, m.py - a.y
    rbx, rby = m.px - b.x, m.py - b.y
    rvx = b.vx - b.w * rby - a.vx + a.w * ray
    rvy = b.vy + b.w * rbx - a.vy - a.w * rax
    vn = rvx * m.nx + rvy * m.ny
    if vn < 0.0:
        ran = _cross(rax, ray, m.nx, m.ny)
        rbn = _cross(rbx, rby, m.nx, m.ny)
        k = inv_mass + ran * ran * a.inv_inertia + rbn * rbn * b.inv_inertia
        j = -vn / k
        jx, jy = j * m.nx, j * m.ny
        a.vx -= jx * a.inv_mass
        a.vy -= jy * a.inv_mass
        a.w -= _cross(rax, ray, jx, jy) * a.inv_inertia
        b.vx += jx * b.inv_mass
        b.vy += jy * b.inv_mass
        b.w += _cross(rbx, rby, jx, jy) * b.inv_inertia
        # Coulomb friction against the tangential relative velocity.
        tvx = rvx - vn * m.nx
        tvy = rvy - vn * m.ny
        tv = math.hypot(tvx, tvy)
        if tv > 1e-9:
            tx, ty = tvx / tv, tvy / tv
            rat = _cross(rax, ray, tx, ty)
            rbt = _cross(rbx, rby, tx, ty)
            kt = inv_mass + rat * rat * a.inv_inertia + rbt * rbt * b.inv_inertia
            jt = min(tv / kt, _FRICTION * j)
            jx, jy = -jt * tx, -jt * ty
            a.vx -= jx * a.inv_mass
            a.vy -= jy * a.inv_mass
            a.w -= _cross(rax, ray, jx, jy) * a.inv_inertia
            b.vx += jx * b.inv_mass
            b.vy += jy * b.inv_mass
            b.w += _cross(rbx, rby, jx, jy) * b.inv_inertia
    correction = max(m.penetration - _POS_SLOP, 0.0) / inv_mass * _POS_CORRECT
    a.x -= correction * m.nx * a.inv_mass
    a.y -= correction * m.ny * a.inv_mass
    b.x += correction * m.nx * b.inv_mass
    b.y += correction * m.ny * b.inv_mass


# -- segment intersection ----------------------------------------------------


def segment_circle_fraction(
    start: Vec2, end: Vec2, center: Vec2, radius: float
) -> Optional[float]:
    """Entry fraction of the segment into the circle, 0.0 if it starts inside."""
    dx = end[0] - start[0]
    dy = end[1] - start[1]
    fx = start[0] - center[0]
    fy = start[1] - center[1]
    if fx * fx + fy * fy <= radius * radius:
        return 0.0
    a = dx * dx + dy * dy
    b = 2.0 * (fx * dx + fy * dy)
    c = fx * fx + fy * fy - radius * radius
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    t = (-b - sq) / (2.0 * a)
    if 0.0 <= t <= 1.0:
        return t
    return None


def segment_polygon_fraction(
    start: Vec2, end: Vec2, verts: list[Vec2]
) -> Optional[float]:
    """Entry fraction of the segment into a convex polygon (world vertices)."""
    # Clip the parametric segment against each half-plane (slab method).
    t_enter = 0.0
    t_exit = 1.0
    dx = end[0] - start[0]
    dy = end[1] - start[1]
    n = len(verts)
    inside_start = True
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        length = math.hypot(ex, ey)
        nx, ny = ey / length, -ex / length
        dist = (start[0] - x0) * nx + (start[1] - y0) * ny
        if dist > 0.0:
            inside_start = False
        denom = dx * nx + dy * ny
        if abs(denom) < 1e-15:
            if dist > 0.0:
                return None
            continue
        t = -dist / denom
        if denom < 0.0:
            t_enter = max(t_enter, t)
        else:
            t_exit = min(t_exit, t)
        if t_enter > t_exit:
            return None
    if inside_start:
        return 0.0
    if 0.0 <= t_enter <= 1.0:
        return t_enter
    return None


def _segment_body_fraction(start: Vec2, end: Vec2, body: Body) -> Optional[float]:
    if isinstance(body.shape, CircleShape):
        return segment_circle_fraction(start, end, (body.x, body.y), body.shape.radius)
    return segment_polygon_fraction(start, end, body.world_vertices())
