"""Simulation/Group/SimModule framework: callback ordering, despawn
queueing, reset semantics, module lookup."""

import pytest

from survivalenv.framework import FrameworkError, Group, SimModule, Simulation
from survivalenv.physics import BodyDef, CircleShape


class Recorder(SimModule):
    def __init__(self, log, tag):
        self.log = log
        self.tag = tag

    def post_reset(self):
        self.log.append((self.tag, "post_reset"))

    def pre_step(self):
        self.log.append((self.tag, "pre_step"))

    def post_step(self):
        self.log.append((self.tag, "post_step"))

    def post_spawn(self, handles):
        self.log.append((self.tag, "post_spawn", tuple(handles)))

    def pre_despawn(self, handles):
        self.log.append((self.tag, "pre_despawn", tuple(handles)))


def circle_def(x=0.0, y=0.0):
    return BodyDef(CircleShape(0.3), position=(x, y))


def test_step_before_reset_raises():
    sim = Simulation([Group("g", [])])
    with pytest.raises(FrameworkError):
        sim.step()


def test_callback_declaration_order():
    log = []
    g1 = Group("g1", [Recorder(log, "a"), Recorder(log, "b")])
    g2 = Group("g2", [Recorder(log, "c")])
    sim = Simulation([g1, g2])
    sim.reset(0)
    assert [e[0] for e in log] == ["a", "b", "c"]
    log.clear()
    sim.step()
    assert log == [
        ("a", "pre_step"), ("b", "pre_step"), ("c", "pre_step"),
        ("a", "post_step"), ("b", "post_step"), ("c", "post_step"),
    ]


def test_spawn_fires_post_spawn_on_all_modules():
    log = []
    group = Group("g", [Recorder(log, "a"), Recorder(log, "b")])
    sim = Simulation([group])
    sim.reset(0)
    handles = group.spawn([circle_def(), circle_def(1.0)])
    assert len(handles) == 2
    assert ("a", "post_spawn", tuple(handles)) in log
    assert ("b", "post_spawn", tuple(handles)) in log
    assert group.bodies == handles
    assert all(sim.owner_of(h) is group for h in handles)


def test_despawn_fires_pre_despawn_before_destruction():
    class Probe(SimModule):
        def pre_despawn(self, handles):
            # The body must still be queryable here.
            self.seen = [self.group.sim.world.position(h) for h in handles]

    probe = Probe()
    group = Group("g", [probe])
    sim = Simulation([group])
    sim.reset(0)
    h = group.spawn([circle_def(2.0, 3.0)])[0]
    group.despawn([h])
    assert probe.seen == [(2.0, 3.0)]
    assert h not in group.bodies
    assert sim.owner_of(h) is None


def test_despawn_unknown_body_errors():
    group = Group("g", [])
    sim = Simulation([group])
    sim.reset(0)
    with pytest.raises(FrameworkError):
        group.despawn([999])


def test_despawn_later_applied_after_post_step():
    alive_during_post_step = []

    class Killer(SimModule):
        def pre_step(self):
            if self.group.bodies:
                self.group.despawn_later([self.group.bodies[0]])

    class Watcher(SimModule):
        def post_step(self):
            alive_during_post_step.append(list(self.group.bodies))

    group = Group("g", [Killer(), Watcher()])
    sim = Simulation([group])
    sim.reset(0)
    h = group.spawn([circle_def()])[0]
    sim.step()
    # Still present during post_step, gone after the step completes.
    assert alive_during_post_step == [[h]]
    assert group.bodies == []


def test_despawn_later_deduplicates():
    group = Group("g", [])
    sim = Simulation([group])
    sim.reset(0)
    h = group.spawn([circle_def()])[0]
    group.despawn_later([h])
    group.despawn_later([h])
    sim.step()
    assert group.bodies == []


def test_reset_clears_and_reseeds():
    group = Group("g", [])
    sim = Simulation([group])
    sim.reset(1)
    group.spawn([circle_def()])
    sim.step()
    first = sim.rng.random()
    sim.reset(1)
    assert group.bodies == []
    assert sim.step_count == 0
    assert sim.rng.random() == first  # same seed, same stream


def test_step_counter_increments_by_one():
    sim = Simulation([Group("g", [])])
    sim.reset(0)
    for expected in range(1, 6):
        sim.step()
        assert sim.step_count == expected


def test_null_module_changes_nothing():
    def run(extra):
        group = Group("g", ([SimModule()] if extra else []))
        sim = Simulation([group])
        sim.reset(3)
        h = group.spawn([circle_def(1.0, 1.0)])[0]
        for _ in range(50):
            sim.world.apply_control(h, (2.0, 0.5), 0.1)
            sim.step()
        return (sim.world.position(h), sim.world.velocity(h),
                sim.world.angle(h), sim.rng.random())

    assert run(False) == run(True)


def test_get_module_first_of_kind():
    log = []
    first = Recorder(log, "first")
    second = Recorder(log, "second")
    group = Group("g", [first, second])
    assert group.get_module(Recorder) is first
    assert group.get_module(SimModule) is first
    assert group.require_module(Recorder) is first


def test_require_module_missing_errors():
    group = Group("g", [])
    with pytest.raises(FrameworkError):
        group.require_module(Recorder)
    assert group.get_module(Recorder) is None


def test_group_lookup_by_name():
    g = Group("agents", [])
    sim = Simulation([g])
    assert sim.group("agents") is g
    with pytest.raises(FrameworkError):
        sim.group("nope")


def test_atomic_spawn_rolls_back_on_invalid_def():
    group = Group("g", [])
    sim = Simulation([group])
    sim.reset(0)
    bad = BodyDef(CircleShape(-1.0))
    with pytest.raises(Exception):
        group.spawn([circle_def(), bad])
    assert group.bodies == []
