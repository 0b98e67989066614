"""Built-in general modules: indexing, death tracking, motors, cameras."""

import logging
import math
import random

import pytest

from _oracles import brute_force_visibility, random_scene
from survivalenv.framework import FrameworkError, Group, SimModule, Simulation
from survivalenv.modules import (
    Cameras, DynamicMotors, IndexBodies, LogDeaths, TrackDeaths,
)
from survivalenv.physics import BodyDef, CircleShape, WorldConfig


def circle_def(x=0.0, y=0.0, theta=0.0):
    return BodyDef(CircleShape(0.3), position=(x, y), angle=theta)


# -- IndexBodies --------------------------------------------------------------


def test_indices_assigned_in_spawn_order_and_never_reused():
    indexer = IndexBodies()
    group = Group("g", [indexer])
    sim = Simulation([group])
    sim.reset(0)
    a, b = group.spawn([circle_def(), circle_def(1.0)])
    assert indexer.index_of(a) == 0
    assert indexer.index_of(b) == 1
    group.despawn([a])
    c = group.spawn([circle_def(2.0)])[0]
    assert indexer.index_of(c) == 2  # index 0 is retired, not recycled
    assert indexer.handle_at(0) is None
    assert not indexer.is_live(0)
    assert indexer.is_live(2)


def test_index_of_unknown_body_errors():
    indexer = IndexBodies()
    group = Group("g", [indexer])
    Simulation([group]).reset(0)
    with pytest.raises(FrameworkError):
        indexer.index_of(123)


# -- TrackDeaths / LogDeaths --------------------------------------------------


def test_track_deaths_records_per_step():
    deaths = TrackDeaths()

    class KillFirst(SimModule):
        def pre_step(self):
            if self.group.bodies:
                self.group.despawn_later([self.group.bodies[0]])

    group = Group("g", [deaths, KillFirst()])
    sim = Simulation([group])
    sim.reset(0)
    a, b = group.spawn([circle_def(), circle_def(1.0)])
    sim.step()
    assert deaths.despawned == [a]
    sim.step()
    assert deaths.despawned == [b]
    sim.step()
    assert deaths.despawned == []  # cleared every step


def test_log_deaths_emits_line(caplog):
    log = LogDeaths()
    group = Group("agents", [IndexBodies(), log])
    sim = Simulation([group])
    sim.reset(0)
    h = group.spawn([circle_def()])[0]
    with caplog.at_level(logging.INFO, logger="survivalenv.deaths"):
        group.despawn([h])
    assert any("group=agents" in r.getMessage() for r in caplog.records)


# -- DynamicMotors ------------------------------------------------------------


def test_motor_controls_validated_and_cleared():
    motors = DynamicMotors()
    group = Group("g", [motors])
    sim = Simulation([group], WorldConfig(linear_damping=0.0))
    sim.reset(0)
    h = group.spawn([circle_def()])[0]
    with pytest.raises(ValueError):
        motors.set_control(h, (2, 0, 0))
    with pytest.raises(FrameworkError):
        motors.set_control(999, (1, 0, 0))
    motors.set_control(h, (1, 0, 0))
    sim.step()
    v1 = sim.world.velocity(h)[0]
    assert v1 > 0.0
    sim.step()  # control not re-applied
    assert sim.world.velocity(h)[0] == pytest.approx(v1)


def test_motor_force_acts_in_body_frame():
    rng = random.Random(3)
    for _ in range(20):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        motors = DynamicMotors(linear_force=3.0)
        group = Group("g", [motors])
        sim = Simulation([group], WorldConfig(linear_damping=0.0,
                                              angular_damping=0.0))
        sim.reset(0)
        h = group.spawn([circle_def(theta=theta)])[0]
        motors.set_control(h, (1, 0, 0))
        sim.step()
        vx, vy = sim.world.velocity(h)
        speed = math.hypot(vx, vy)
        assert vx / speed == pytest.approx(math.cos(theta), abs=1e-12)
        assert vy / speed == pytest.approx(math.sin(theta), abs=1e-12)


def test_motor_lateral_and_torque():
    motors = DynamicMotors()
    group = Group("g", [motors])
    sim = Simulation([group], WorldConfig(linear_damping=0.0,
                                          angular_damping=0.0))
    sim.reset(0)
    h = group.spawn([circle_def()])[0]
    motors.set_control(h, (0, 1, -1))
    sim.step()
    vx, vy = sim.world.velocity(h)
    assert vy > 0.0 and abs(vx) < 1e-12
    assert sim.world.angular_velocity(h) < 0.0


# -- Cameras ------------------------------------------------------------------


def make_camera_sim(half_angle=math.pi / 3.0, view_range=math.inf):
    cameras = Cameras(half_angle, view_range)
    agents = Group("agents", [cameras])
    items = Group("items", [])
    boxes = Group("boxes", [])
    sim = Simulation([agents, items, boxes])
    sim.reset(0)
    return sim, cameras, agents, items, boxes


def test_visibility_matches_brute_force_on_random_scenes():
    rng = random.Random(17)
    for scene in range(60):
        sim, cameras, agents, items, boxes = make_camera_sim()
        observers = random_scene(rng, agents, items, boxes)
        targets = [h for g in sim.groups for h in g.bodies]
        got = cameras.compute_visibility()
        expected = brute_force_visibility(
            sim.world, observers, cameras.half_angle, targets=targets
        )
        for obs in observers:
            assert got[obs] == expected[obs], f"scene {scene} observer {obs}"


def test_view_range_limits_visibility():
    sim, cameras, agents, items, boxes = make_camera_sim(view_range=2.0)
    a = agents.spawn([circle_def(0.0, 0.0)])[0]
    near = agents.spawn([circle_def(1.5, 0.0)])[0]
    far = agents.spawn([circle_def(5.0, 0.0)])[0]
    vis = cameras.compute_visibility()
    assert near in vis[a]
    assert far not in vis[a]


def test_cone_excludes_behind():
    sim, cameras, agents, items, boxes = make_camera_sim()
    a = agents.spawn([circle_def(0.0, 0.0, theta=0.0)])[0]
    front = agents.spawn([circle_def(3.0, 0.0)])[0]
    behind = agents.spawn([circle_def(-3.0, 0.0)])[0]
    vis = cameras.compute_visibility()
    assert front in vis[a]
    assert behind not in vis[a]


def test_solid_body_occludes_but_sensor_does_not():
    sim, cameras, agents, items, boxes = make_camera_sim()
    a = agents.spawn([circle_def(0.0, 0.0)])[0]
    target = agents.spawn([circle_def(6.0, 0.0)])[0]
    blocker = agents.spawn([circle_def(3.0, 0.0)])[0]
    vis = cameras.compute_visibility()
    assert blocker in vis[a]
    assert target not in vis[a]
    agents.despawn([blocker])
    sensor = items.spawn([BodyDef(CircleShape(0.3), position=(3.0, 0.0),
                                  is_sensor=True)])[0]
    vis = cameras.compute_visibility()
    assert target in vis[a]
    assert sensor in vis[a]


def test_visibility_computed_in_post_step():
    sim, cameras, agents, items, boxes = make_camera_sim()
    a = agents.spawn([circle_def(0.0, 0.0)])[0]
    b = agents.spawn([circle_def(3.0, 0.0)])[0]
    sim.step()
    assert b in cameras.visible_set(a)
    with pytest.raises(FrameworkError):
        cameras.visible_set(999)
