"""Environment API: observations, masks, rewards, termination, hashing,
flattening and the vectorized view."""

import math
import random

import numpy as np
import pytest

import survivalenv as se
from survivalenv.config import preset_config
from survivalenv.env import (
    ACTION_SIZES, EnvError, SurvivalEnv, VectorizedEnv, flatten_observation,
    observation_layout, unflatten_observation, validate_action,
)
from survivalenv.runner import hash_stream, make_policy, run_episode

NOOP = (1, 1, 1, 0, 0, 0)


def random_actions(rng, env):
    return [
        tuple(rng.randrange(s) for s in ACTION_SIZES)
        if env.agent_alive(i) else None
        for i in range(env.config.agents)
    ]


def test_action_validation():
    assert validate_action(NOOP) == NOOP
    with pytest.raises(EnvError):
        validate_action((1, 1, 1, 0, 0))
    with pytest.raises(EnvError):
        validate_action((3, 1, 1, 0, 0, 0))
    with pytest.raises(EnvError):
        validate_action((1, 1, 1, 2, 0, 0))
    with pytest.raises(EnvError):
        validate_action((-1, 1, 1, 0, 0, 0))


def test_reset_returns_per_agent_observations():
    env = SurvivalEnv(preset_config("ffa-3"))
    observations = env.reset(0)
    assert len(observations) == 2
    obs = observations[0]
    assert obs.x_self.shape == (8,)
    assert obs.x_zone.shape == (6,)
    layout = env.entity_layout()
    for kind, (n, w) in layout.items():
        rows, mask = obs.entities[kind]
        assert rows.shape == (n, w)
        assert mask.shape == (n,)


def test_teams_observation_includes_team_id():
    env = SurvivalEnv(preset_config("2v2-1"))
    observations = env.reset(0)
    assert observations[0].x_self.shape == (9,)
    assert observations[0].x_self[1] == 0.0  # team of agent 0
    assert observations[3].x_self[1] == 1.0


def test_self_row_contents():
    env = SurvivalEnv(preset_config("ffa-1"))
    obs = env.reset(5)[1]
    i, hp, x, y, theta, vx, vy, omega = obs.x_self
    assert i == 1.0
    assert hp == 100.0
    handle = env.agent_handles[1]
    assert (x, y) == env.sim.world.position(handle)
    assert theta == env.sim.world.angle(handle)
    assert (vx, vy, omega) == (0.0, 0.0, 0.0)


def test_zone_observation_matches_zone_state():
    env = SurvivalEnv(preset_config("ffa-1"))
    obs = env.reset(3)[0]
    (c, r) = env.zone.current_circle()
    (nc, nr) = env.zone.next_stationary()
    assert tuple(obs.x_zone) == (c[0], c[1], r, nc[0], nc[1], nr)


def test_flat_observation_length_arithmetic():
    # 2 agents, 4 heals, no boxes:
    # 8 + 6 + (1*8+1) + (4*2+4) + 0 + 0 + (2+1) + (10+1) = 49
    config = preset_config("ffa-1")
    config.heal_count = 4
    env = SurvivalEnv(config)
    layout = observation_layout(env)
    assert layout.total == 49
    obs = env.reset(0)[0]
    assert flatten_observation(obs).shape == (49,)


def test_flatten_round_trip():
    env = SurvivalEnv(preset_config("2v2-3"))
    layout = observation_layout(env)
    obs = env.reset(1)[2]
    flat = flatten_observation(obs)
    assert flat.shape == (layout.total,)
    back = unflatten_observation(flat, layout)
    assert np.array_equal(back.x_self, obs.x_self)
    assert np.array_equal(back.x_zone, obs.x_zone)
    for kind in obs.entities:
        assert np.array_equal(back.entities[kind][0], obs.entities[kind][0])
        assert np.array_equal(back.entities[kind][1], obs.entities[kind][1])


def assert_mask_hygiene(obs, env, agent):
    for kind, (rows, mask) in obs.entities.items():
        for k in range(rows.shape[0]):
            if mask[k] == 0.0:
                assert not rows[k].any(), f"{kind}[{k}] nonzero under mask 0"
            else:
                assert mask[k] == 1.0
    if env.agent_alive(agent):
        slot = env.inventory.last_slot(env.agent_handles[agent])
        heal_mask = obs.entities["healslot"][1][0]
        box_mask = obs.entities["boxslot"][1][0]
        if slot is None:
            assert heal_mask == 0.0 and box_mask == 0.0
        elif slot.kind == "heal":
            assert heal_mask == 1.0 and box_mask == 0.0
        else:
            assert heal_mask == 0.0 and box_mask == 1.0
    else:
        assert not obs.x_self.any() and not obs.x_zone.any()


def test_mask_hygiene_over_random_episode():
    rng = random.Random(0)
    for name in ("ffa-3", "2v2-4"):
        env = SurvivalEnv(preset_config(name))
        observations = env.reset(11)
        for _ in range(200):
            if env.done:
                break
            observations, _, _, _ = env.step(random_actions(rng, env))
            for i, obs in enumerate(observations):
                assert_mask_hygiene(obs, env, i)


def test_dead_observer_gets_zero_observation():
    config = preset_config("ffa-1")
    config.agent.initial_health = 1
    config.agent.melee_damage = 5
    env = SurvivalEnv(config)
    env.reset(3)
    # Zone damage will kill quickly once outside; force with melee range 0.
    steps = 0
    while not env.done and steps < 3000:
        obs, rewards, done, info = env.step([NOOP, NOOP])
        steps += 1
        for i in range(2):
            if not env.agent_alive(i):
                assert not obs[i].x_self.any()
    assert env.done


def test_invisible_other_row_is_masked():
    # Two agents facing away from each other: neither sees the other.
    env = SurvivalEnv(preset_config("ffa-1"))
    env.reset(0)
    h0, h1 = env.agent_handles
    x0 = env.sim.world.position(h0)
    x1 = env.sim.world.position(h1)
    # Each faces directly away from the other.
    to0 = math.atan2(x0[1] - x1[1], x0[0] - x1[0])
    env.sim.world.set_transform(h0, x0, to0)
    env.sim.world.set_transform(h1, x1, to0 + math.pi)
    obs, _, _, _ = env.step([NOOP, NOOP])
    rows, mask = obs[0].entities["other"]
    assert mask[0] == 0.0 and not rows[0].any()


def test_omniscient_when_cameras_disabled():
    config = preset_config("ffa-1")
    config.cameras.enabled = False
    env = SurvivalEnv(config)
    obs = env.reset(0)
    assert obs[0].entities["other"][1][0] == 1.0
    assert obs[0].entities["heal"][1].sum() == config.heal_count


def recompute_reward(config, events, team_of=None, prev_teams=None,
                     now_teams=None):
    """Reward oracle, recomputed from StepEvents alone."""
    r = config.rewards
    n = config.agents
    if team_of is None:
        return [
            events.alive[i] * r.r_alive + (1 - events.alive[i]) * r.r_dead
            + events.kills[i] * r.r_kill + events.died[i] * r.r_death
            for i in range(n)
        ]
    out = []
    for i in range(n):
        team = team_of(i)
        t_alive = 1 if team in now_teams else 0
        t_died = 1 if (team in prev_teams and team not in now_teams) else 0
        t_kills = sum(events.kills[j] for j in range(n) if team_of(j) == team)
        out.append(t_alive * r.r_alive + (1 - t_alive) * r.r_dead
                   + t_kills * r.r_kill + t_died * r.r_death)
    return out


def test_reward_oracle_all_presets():
    rng = random.Random(21)
    for name in se.PRESETS:
        config = preset_config(name)
        env = SurvivalEnv(config)
        env.reset(7)
        prev_teams = env._teams_alive() if config.teams else None
        for _ in range(300):
            if env.done:
                break
            _, rewards, _, info = env.step(random_actions(rng, env))
            events = info["events"]
            if config.teams:
                now_teams = env._teams_alive()
                expected = recompute_reward(
                    config, events, env.team_of_index, prev_teams, now_teams)
                prev_teams = now_teams
            else:
                expected = recompute_reward(config, events)
            assert rewards == expected, name


def test_death_step_reward_uses_post_step_aliveness():
    config = preset_config("ffa-4")  # r_dead=-1, r_death=-100
    config.agent.initial_health = 1
    env = SurvivalEnv(config)
    env.reset(0)
    h0 = env.agent_handles[0]
    env.health.damage(h0, 5, se.env.DamageCause("zone"))
    _, rewards, done, info = env.step([None, NOOP])
    assert info["events"].died[0] == 1
    assert rewards[0] == -1.0 + (-100.0)  # r_dead + r_death, not r_alive
    assert done  # last-alive termination


def test_team_members_share_rewards():
    env = SurvivalEnv(preset_config("2v2-4"))
    rng = random.Random(3)
    env.reset(9)
    for _ in range(400):
        if env.done:
            break
        _, rewards, _, _ = env.step(random_actions(rng, env))
        assert rewards[0] == rewards[1]
        assert rewards[2] == rewards[3]


def test_termination_all_dead_vs_last_alive():
    config = preset_config("ffa-1")  # all-dead
    config.agent.initial_health = 1
    env = SurvivalEnv(config)
    env.reset(2)
    env.health.damage(env.agent_handles[0], 5, se.env.DamageCause("zone"))
    _, _, done, _ = env.step([None, NOOP])
    assert not done  # one agent still alive
    env.health.damage(env.agent_handles[1], 5, se.env.DamageCause("zone"))
    _, _, done, _ = env.step([None, None])
    assert done


def test_step_limit_terminates():
    config = preset_config("ffa-1")
    config.max_episode_steps = 5
    env = SurvivalEnv(config)
    env.reset(0)
    for k in range(5):
        _, _, done, _ = env.step([NOOP, NOOP])
    assert done
    assert env.stats.length == 5


def test_step_after_done_raises():
    config = preset_config("ffa-1")
    config.max_episode_steps = 1
    env = SurvivalEnv(config)
    env.reset(0)
    env.step([NOOP, NOOP])
    with pytest.raises(EnvError):
        env.step([NOOP, NOOP])


def test_wrong_action_count_raises():
    env = SurvivalEnv(preset_config("ffa-1"))
    env.reset(0)
    with pytest.raises(EnvError):
        env.step([NOOP])


def test_same_seed_same_hashes():
    a = hash_stream(preset_config("ffa-3"), "random", 5, 150)
    b = hash_stream(preset_config("ffa-3"), "random", 5, 150)
    assert a == b


def test_different_seed_different_hashes():
    a = hash_stream(preset_config("ffa-1"), "random", 5, 50)
    b = hash_stream(preset_config("ffa-1"), "random", 6, 50)
    assert a != b


def test_state_hash_sensitive_to_health():
    env = SurvivalEnv(preset_config("ffa-1"))
    env.reset(0)
    before = env.state_hash()
    env.health.damage(env.agent_handles[0], 1, se.env.DamageCause("zone"))
    assert env.state_hash() != before


def test_episode_stats_accumulate():
    env = SurvivalEnv(preset_config("ffa-1"))
    policy = make_policy("zone-follower", 0)
    result = run_episode(env, policy, seed=4, max_steps=400)
    stats = result.stats
    assert stats.length <= 400
    assert all(r >= 0.0 for r in stats.returns)  # ffa-1: r_alive only
    text = stats.as_lines()
    assert "length =" in text and "returns =" in text


def test_vectorized_matches_native():
    env = SurvivalEnv(preset_config("2v2-2"))
    vec = VectorizedEnv(env, seed=12)
    obs = vec.reset()
    assert obs.shape[0] == 4
    native = [flatten_observation(o) for o in env.reset(12)]
    assert np.array_equal(obs, np.stack(native))
    rng = random.Random(0)
    actions = [tuple(rng.randrange(s) for s in ACTION_SIZES) for _ in range(4)]
    obs, rewards, dones, info = vec.step(actions)
    assert obs.shape[0] == 4 and rewards.shape == (4,) and dones.shape == (4,)
    assert not dones.any()


def test_vectorized_auto_resets():
    config = preset_config("ffa-1")
    config.max_episode_steps = 2
    env = SurvivalEnv(config)
    vec = VectorizedEnv(env, seed=5)
    vec.reset()
    vec.step([NOOP, NOOP])
    obs, _, dones, _ = vec.step([NOOP, NOOP])
    assert dones.all()
    assert not env.done  # already reset into the next episode
    fresh = np.stack([flatten_observation(o)
                      for o in SurvivalEnv(config).reset(6)])
    assert np.array_equal(obs, fresh)
