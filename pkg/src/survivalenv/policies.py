"""Scripted policies: uniform random, and a zone-follower that steers
towards the safe zone and consumes heals; both fully seeded."""

from __future__ import annotations

import math
import random

import numpy as np

from .env import Action, AgentObservation


class RandomPolicy:
    def __init__(self, seed: int):
        self.rng = random.Random(seed)

    def act(self, agent: int, obs: AgentObservation) -> Action:
        r = self.rng
        return (r.randrange(3), r.randrange(3), r.randrange(3),
                r.randrange(2), r.randrange(2), r.randrange(2))


class ZoneFollowerPolicy:
    """Drives towards the current zone center, turning to face it first, and
    uses the last inventory item whenever it is a heal."""

    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)  # unused; kept for a uniform interface

    def act(self, agent: int, obs: AgentObservation) -> Action:
        x_self = obs.x_self
        # Layout: (i, [team], h, x, y, theta, vx, vy, omega).
        base = 2 if len(x_self) == 8 else 3
        x, y, theta = x_self[base], x_self[base + 1], x_self[base + 2]
        cx, cy = obs.x_zone[0], obs.x_zone[1]
        dx, dy = cx - x, cy - y
        distance = math.hypot(dx, dy)
        heading_error = _wrap_angle(math.atan2(dy, dx) - theta)
        a_theta = 1
        if heading_error > 0.1:
            a_theta = 2
        elif heading_error < -0.1:
            a_theta = 0
        a_x = 2 if (abs(heading_error) < math.pi / 2 and distance > 0.3) else 1
        heal_mask = obs.entities["healslot"][1]
        a_use = 1 if heal_mask[0] > 0.0 else 0
        return (a_x, 1, a_theta, 0, a_use, 0)


def _wrap_angle(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi
