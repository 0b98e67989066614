"""Headless rendering: a Canvas with drawing primitives and ordered Views,
plus the standard views for the survival arena. Frames are RGB numpy arrays
writable as binary PPM. Rendering never mutates simulation state."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .env import SurvivalEnv
from .physics import CircleShape, PolygonShape

BACKGROUND = (24, 24, 28)
WALL_COLOR = (90, 90, 96)
AGENT_COLORS = (
    (66, 135, 245), (245, 105, 66), (92, 200, 92), (220, 180, 60),
    (180, 100, 220), (80, 200, 200), (230, 120, 180), (160, 160, 160),
)
ZONE_COLOR = (70, 160, 255)
NEXT_ZONE_COLOR = (60, 90, 140)
HEAL_COLOR = (80, 230, 120)
BOX_COLOR = (150, 110, 70)
BOX_ITEM_COLOR = (200, 160, 110)
HEALTH_COLOR = (60, 220, 60)
MELEE_COLOR = (255, 240, 120)

# 3x5 digit bitmaps for agent ID glyphs.
_DIGITS = {
    "0": "111101101101111", "1": "010110010010111", "2": "111001111100111",
    "3": "111001111001111", "4": "101101111001001", "5": "111100111001111",
    "6": "111100111101111", "7": "111001001001001", "8": "111101111101111",
    "9": "111101111001111",
}


class Canvas:
    """Fixed-size RGB framebuffer with a world-to-screen transform and an
    ordered list of Views; render() clears and calls every view in order."""

    def __init__(self, width: int = 400, height: int = 400,
                 world_half_extent: float = 10.5):
        self.width = width
        self.height = height
        self.scale = min(width, height) / (2.0 * world_half_extent)
        self.buffer = np.zeros((height, width, 3), dtype=np.uint8)
        self.views: list[View] = []

    def add_view(self, view: "View") -> None:
        self.views.append(view)

    def clear(self) -> None:
        self.buffer[:] = BACKGROUND

    def render(self) -> np.ndarray:
        self.clear()
        for view in self.views:
            view.draw(self)
        return self.buffer

    # -- transform -----------------------------------------------------------

    def to_screen(self, x: float, y: float) -> tuple[int, int]:
        sx = int(round(self.width / 2.0 + x * self.scale))
        sy = int(round(self.height / 2.0 - y * self.scale))
        return sx, sy

    # -- primitives ----------------------------------------------------------

    def draw_circle(self, center, radius: float, color, filled: bool = True,
                    thickness: float = 1.5) -> None:
        cx, cy = self.to_screen(*center)
        r = radius * self.scale
        lo_x = max(0, int(cx - r - 2))
        hi_x = min(self.width, int(cx + r + 3))
        lo_y = max(0, int(cy - r - 2))
        hi_y = min(self.height, int(cy + r + 3))
        if lo_x >= hi_x or lo_y >= hi_y:
            return
        yy, xx = np.mgrid[lo_y:hi_y, lo_x:hi_x]
        dist_sq = (xx - cx) ** 2 + (yy - cy) ** 2
        if filled:
            mask = dist_sq <= r * r
        else:
            mask = (dist_sq <= (r + thickness) ** 2) & \
                (dist_sq >= max(0.0, r - thickness) ** 2)
        self.buffer[lo_y:hi_y, lo_x:hi_x][mask] = color

    def draw_segment(self, p0, p1, color) -> None:
        x0, y0 = self.to_screen(*p0)
        x1, y1 = self.to_screen(*p1)
        steps = max(abs(x1 - x0), abs(y1 - y0), 1)
        ts = np.linspace(0.0, 1.0, steps + 1)
        xs = np.clip(np.round(x0 + (x1 - x0) * ts).astype(int), 0,
                     self.width - 1)
        ys = np.clip(np.round(y0 + (y1 - y0) * ts).astype(int), 0,
                     self.height - 1)
        self.buffer[ys, xs] = color

    def draw_polygon(self, vertices, color) -> None:
        pts = [self.to_screen(*v) for v in vertices]
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        lo_x = max(0, min(xs))
        hi_x = min(self.width, max(xs) + 1)
        lo_y = max(0, min(ys))
        hi_y = min(self.height, max(ys) + 1)
        if lo_x >= hi_x or lo_y >= hi_y:
            return
        yy, xx = np.mgrid[lo_y:hi_y, lo_x:hi_x]
        inside = np.ones(yy.shape, dtype=bool)
        n = len(pts)
        for i in range(n):
            x0, y0 = pts[i]
            x1, y1 = pts[(i + 1) % n]
            # Screen y is flipped, so CCW world polygons wind CW on screen.
            inside &= (xx - x0) * (y1 - y0) - (yy - y0) * (x1 - x0) >= 0
        self.buffer[lo_y:hi_y, lo_x:hi_x][inside] = color

    def draw_rect(self, x: int, y: int, w: int, h: int, color) -> None:
        lo_x, hi_x = max(0, x), min(self.width, x + w)
        lo_y, hi_y = max(0, y), min(self.height, y + h)
        if lo_x < hi_x and lo_y < hi_y:
            self.buffer[lo_y:hi_y, lo_x:hi_x] = color

    def draw_glyph(self, text: str, x: int, y: int, color,
                   pixel: int = 2) -> None:
        for ch in text:
            bits = _DIGITS.get(ch)
            if bits is None:
                continue
            for k, bit in enumerate(bits):
                if bit == "1":
                    self.draw_rect(x + (k % 3) * pixel, y + (k // 3) * pixel,
                                   pixel, pixel, color)
            x += 4 * pixel

    def draw_body(self, world, handle: int, color) -> None:
        body = world.bodies[handle]
        if isinstance(body.shape, CircleShape):
            self.draw_circle((body.x, body.y), body.shape.radius, color)
        else:
            self.draw_polygon(body.world_vertices(), color)


class View:
    """A single drawing callback over Canvas primitives."""

    def draw(self, canvas: Canvas) -> None:
        raise NotImplementedError


class WallView(View):
    def __init__(self, env: SurvivalEnv):
        self.env = env

    def draw(self, canvas: Canvas) -> None:
        world = self.env.sim.world
        for handle in world.wall_handles:
            canvas.draw_body(world, handle, WALL_COLOR)


class ZoneView(View):
    def __init__(self, env: SurvivalEnv):
        self.env = env

    def draw(self, canvas: Canvas) -> None:
        center, radius = self.env.zone.current_circle()
        nxt_center, nxt_radius = self.env.zone.next_stationary()
        if nxt_radius > 0.0:
            canvas.draw_circle(nxt_center, nxt_radius, NEXT_ZONE_COLOR,
                               filled=False)
        if radius > 0.0:
            canvas.draw_circle(center, radius, ZONE_COLOR, filled=False)


class ItemView(View):
    def __init__(self, env: SurvivalEnv):
        self.env = env

    def draw(self, canvas: Canvas) -> None:
        world = self.env.sim.world
        for handle in self.env.heals_group.bodies:
            canvas.draw_circle(world.position(handle), 0.2, HEAL_COLOR)
        for handle in self.env.boxitems_group.bodies:
            canvas.draw_circle(world.position(handle), 0.2, BOX_ITEM_COLOR)


class BoxView(View):
    def __init__(self, env: SurvivalEnv):
        self.env = env

    def draw(self, canvas: Canvas) -> None:
        world = self.env.sim.world
        for handle in self.env.boxes_group.bodies:
            canvas.draw_body(world, handle, BOX_COLOR)


class AgentView(View):
    """Agents with a facing tick, a green health bar above and an ID glyph."""

    def __init__(self, env: SurvivalEnv):
        self.env = env

    def draw(self, canvas: Canvas) -> None:
        env = self.env
        world = env.sim.world
        for i, handle in enumerate(env.agent_handles):
            if not env.agent_alive(i):
                continue
            x, y = world.position(handle)
            radius = env.config.agent.radius
            color = AGENT_COLORS[i % len(AGENT_COLORS)]
            canvas.draw_circle((x, y), radius, color)
            theta = world.angle(handle)
            tip = (x + radius * math.cos(theta), y + radius * math.sin(theta))
            canvas.draw_segment((x, y), tip, (255, 255, 255))
            # Health bar scaled by current/initial health.
            frac = max(0.0, min(1.0, env.health.health_of(handle)
                                / env.config.agent.initial_health))
            sx, sy = canvas.to_screen(x - radius, y + radius + 0.25)
            width = max(1, int(2 * radius * canvas.scale))
            canvas.draw_rect(sx, sy, int(width * frac), 3, HEALTH_COLOR)
            gx, gy = canvas.to_screen(x - 0.1, y + radius + 0.9)
            canvas.draw_glyph(str(i), gx, gy, (255, 255, 255))


class MeleeView(View):
    def __init__(self, env: SurvivalEnv):
        self.env = env

    def draw(self, canvas: Canvas) -> None:
        for hit in self.env.melee.attacks_this_step:
            canvas.draw_segment(hit.segment[0], hit.segment[1], MELEE_COLOR)


def make_canvas(env: SurvivalEnv, width: int = 400,
                height: int = 400) -> Canvas:
    """Canvas with the standard view stack registered back to front."""
    half = env.config.world.room_half_extent + env.config.world.wall_thickness
    canvas = Canvas(width, height, world_half_extent=half)
    for view in (WallView(env), ZoneView(env), BoxView(env), ItemView(env),
                 MeleeView(env), AgentView(env)):
        canvas.add_view(view)
    return canvas


def write_ppm(frame: np.ndarray, path: str) -> None:
    """Binary PPM (P6), zero-dependency and bit-exactly testable."""
    height, width, _ = frame.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode())
        fh.write(frame.astype(np.uint8).tobytes())


def read_ppm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P6"):
        raise ValueError("not a binary PPM file")
    parts = data.split(b"\n", 3)
    width, height = (int(v) for v in parts[1].split())
    pixels = np.frombuffer(parts[3], dtype=np.uint8, count=width * height * 3)
    return pixels.reshape(height, width, 3)


def render_replay_frames(replay, out_dir: str, every: int = 30,
                         width: int = 400, height: int = 400) -> list[str]:
    """Re-run a replay and write a PPM frame every `every` steps (plus the
    initial and final states). Returns the written paths."""
    import os

    from .replay import ReplayError

    env = SurvivalEnv(replay.config)
    env.reset(replay.seed)
    canvas = make_canvas(env, width, height)
    os.makedirs(out_dir, exist_ok=True)
    paths: list[str] = []

    def emit(step: int) -> None:
        path = os.path.join(out_dir, f"frame_{step:06d}.ppm")
        write_ppm(canvas.render(), path)
        paths.append(path)

    emit(0)
    total = len(replay.actions)
    for step, step_actions in enumerate(replay.actions):
        live = env.live_agent_indices()
        if len(live) != len(step_actions):
            raise ReplayError(f"divergence at step {step}")
        per_agent = [None] * replay.config.agents
        for i, action in zip(live, step_actions):
            per_agent[i] = action
        env.step(per_agent)
        if (step + 1) % every == 0 or step + 1 == total:
            emit(step + 1)
    return paths
