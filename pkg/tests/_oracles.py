"""Independent reference implementations used by the test suite.

These are deliberately written against the scalar physics helpers (per-body
loops) so they share no code path with the batched production visibility
kernel.
"""

import math
import random

from survivalenv.physics import (
    BodyDef, CircleShape, PolygonShape, World, _segment_body_fraction,
)


def brute_force_visibility(world, observers, half_angle, view_range=math.inf,
                           targets=None):
    """Cone test plus nearest-intersection occlusion, one pair at a time."""
    if targets is None:
        targets = list(world.bodies)
    result = {}
    for obs in observers:
        ox, oy = world.position(obs)
        theta = world.angle(obs)
        fx, fy = math.cos(theta), math.sin(theta)
        visible = set()
        for tgt in targets:
            body = world.bodies[tgt]
            if tgt == obs:
                continue
            dx, dy = body.x - ox, body.y - oy
            dist = math.hypot(dx, dy)
            if dist >= 1e-12:
                if dx * fx + dy * fy < math.cos(half_angle) * dist:
                    continue
            if dist > view_range:
                continue
            if body.sensor:
                f_target = 1.0
            elif isinstance(body.shape, CircleShape):
                f_target = max(0.0, 1.0 - body.shape.radius / dist)
            else:
                f = _segment_body_fraction((ox, oy), (body.x, body.y), body)
                f_target = min(f, 1.0) if f is not None else 1.0
            blocked = False
            for occ, occ_body in world.bodies.items():
                if occ in (obs, tgt) or occ_body.sensor:
                    continue
                f = _segment_body_fraction((ox, oy), (body.x, body.y), occ_body)
                if f is not None and f < f_target:
                    blocked = True
                    break
            if not blocked:
                visible.add(tgt)
        result[obs] = visible
    return result


def random_scene(rng: random.Random, agents_group, items_group, boxes_group,
                 n_circles=6, n_sensors=4, n_boxes=5, half_extent=8.0):
    """Non-overlapping random bodies spawned through framework groups;
    returns the circle (observer) handles."""
    placed = []  # (x, y, bound radius)

    def sample(bound):
        for _ in range(500):
            x = rng.uniform(-half_extent, half_extent)
            y = rng.uniform(-half_extent, half_extent)
            if all(math.hypot(x - px, y - py) > bound + pb + 0.05
                   for px, py, pb in placed):
                placed.append((x, y, bound))
                return x, y
        raise RuntimeError("could not place body")

    circles = []
    for _ in range(n_circles):
        r = rng.uniform(0.2, 0.6)
        x, y = sample(r)
        circles.extend(agents_group.spawn([BodyDef(
            CircleShape(r), position=(x, y),
            angle=rng.uniform(0.0, 2.0 * math.pi),
        )]))
    for _ in range(n_sensors):
        x, y = sample(0.2)
        items_group.spawn([BodyDef(CircleShape(0.2), position=(x, y),
                                   is_sensor=True)])
    for _ in range(n_boxes):
        w = rng.uniform(0.3, 0.9)
        h = rng.uniform(0.3, 0.9)
        bound = math.hypot(w, h)
        x, y = sample(bound)
        verts = ((-w, -h), (w, -h), (w, h), (-w, h))
        boxes_group.spawn([BodyDef(
            PolygonShape(verts), position=(x, y),
            angle=rng.uniform(0.0, 2.0 * math.pi),
        )])
    return circles
