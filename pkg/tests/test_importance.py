import csv
from types import SimpleNamespace

import numpy as np
import pytest

from districtbench.data import generate_synthetic_dataset
from districtbench.importance import NO_OP, agent_importance, no_op_action
from districtbench.sim import DistrictEnv, SimConfig, clone_state, decode_action, reset, step
from districtbench.data import BuildingParams

from conftest import flat_bundle


class ScriptedEnv:
    """Reward is the summed deviation of every action from the no-op."""

    def __init__(self, n):
        self.n_agents = n
        self.t = 0
        self.clones = 0

    def observe(self):
        return np.full((self.n_agents, 1), float(self.t))

    def clone(self):
        self.clones += 1
        c = ScriptedEnv(self.n_agents)
        c.t = self.t
        return c

    def step(self, actions):
        a = np.asarray(actions, dtype=float).reshape(self.n_agents, 3)
        self.t += 1
        return SimpleNamespace(reward=float((a - np.array(NO_OP)).sum()), observations=self.observe())


class CountingEnv(DistrictEnv):
    clones = 0

    def clone(self):
        CountingEnv.clones += 1
        return super().clone()


def seeded_policy(n, seed):
    rng = np.random.default_rng(seed)
    return lambda obs: rng.uniform(size=(n, 3))


def test_no_op_triple():
    a = no_op_action()
    assert tuple(a.as_array()) == NO_OP == (0.5, 0.5, 0.0)
    assert no_op_action() == no_op_action()
    cmd = decode_action(a.as_array(), BuildingParams())
    assert cmd.battery_power[0] == cmd.dhw_power[0] == cmd.cooling_power[0] == 0.0


def test_no_op_on_demand_free_district():
    state, _ = reset(flat_bundle(T=48, n=3))
    assert step(state, [NO_OP] * 3).reward == 0.0


def test_scripted_closed_form():
    env = ScriptedEnv(3)
    actions = np.random.default_rng(5).uniform(size=(24, 3, 3))
    it = iter(actions)
    rec = agent_importance(env, lambda obs: next(it), 24)
    expected = (actions - np.array(NO_OP)).sum(axis=2).mean(axis=0)
    assert np.allclose(rec.scores, expected, rtol=0, atol=1e-12)
    assert env.clones == 3 * 24
    assert rec.clones_per_step == 3


def test_all_no_op_scores_zero(district3):
    env = DistrictEnv.from_bundle(district3)
    env.reset(seed=1)
    rec = agent_importance(env, lambda obs: np.tile(NO_OP, (3, 1)), 24)
    assert np.all(rec.scores == 0.0)


def test_always_no_op_agent_scores_zero(district3):
    env = DistrictEnv.from_bundle(district3)
    env.reset(seed=1)
    rng = np.random.default_rng(0)

    def policy(obs):
        a = rng.uniform(size=(3, 3))
        a[1] = NO_OP
        return a

    rec = agent_importance(env, policy, 24)
    assert rec.scores[1] == 0.0


def test_brute_force_replay_oracle():
    bundle = generate_synthetic_dataset(8, 3, 48)
    env = DistrictEnv.from_bundle(bundle, config=SimConfig(obs_noise_std=0.05))
    env.reset(seed=3)
    rec = agent_importance(env, seeded_policy(3, 11), 24)

    # replay: plain rollout with saved states, then every counterfactual from its saved state
    env2 = DistrictEnv.from_bundle(bundle, config=SimConfig(obs_noise_std=0.05))
    env2.reset(seed=3)
    policy = seeded_policy(3, 11)
    saved, joints, rewards = [], [], []
    for _ in range(24):
        saved.append(clone_state(env2.state))
        joints.append(policy(env2.observe()))
        rewards.append(env2.step(joints[-1]).reward)
    diffs = np.zeros((24, 3))
    for t in range(24):
        for i in range(3):
            cf = joints[t].copy()
            cf[i] = NO_OP
            diffs[t, i] = rewards[t] - step(clone_state(saved[t]), cf).reward
    assert np.array_equal(rec.differences, diffs)
    assert np.array_equal(rec.scores, diffs.mean(axis=0))
    assert np.array_equal(rec.rewards, np.array(rewards))


def test_non_interference(district3):
    cfg = SimConfig(obs_noise_std=0.1, soc_jitter=0.2)
    measured = DistrictEnv.from_bundle(district3, config=cfg)
    measured.reset(seed=4)
    rec = agent_importance(measured, seeded_policy(3, 2), 24)

    plain = DistrictEnv.from_bundle(district3, config=cfg)
    obs = plain.reset(seed=4)
    policy = seeded_policy(3, 2)
    rewards = []
    for _ in range(24):
        out = plain.step(policy(obs))
        obs = out.observations
        rewards.append(out.reward)
    assert rec.rewards.tobytes() == np.array(rewards).tobytes()
    s, p = measured.state, plain.state
    assert s.t == p.t == 24
    for attr in ("elec_soc", "dhw_soc", "indoor_temp", "building_net"):
        assert getattr(s, attr).tobytes() == getattr(p, attr).tobytes()
    assert measured.observe().tobytes() == plain.observe().tobytes()


def test_clone_count_on_district(district3):
    CountingEnv.clones = 0
    env = CountingEnv(DistrictEnv.from_bundle(district3).model)
    env.reset()
    agent_importance(env, seeded_policy(3, 0), 10)
    assert CountingEnv.clones == 30


def test_zero_horizon_rejected():
    with pytest.raises(ValueError):
        agent_importance(ScriptedEnv(2), lambda obs: np.zeros((2, 3)), 0)


def test_clone_failure_reported():
    class Broken(ScriptedEnv):
        def clone(self):
            raise OSError("no copy")

    with pytest.raises(RuntimeError, match="clone"):
        agent_importance(Broken(2), lambda obs: np.zeros((2, 3)), 3)


def test_hold_cooling_variant():
    env = ScriptedEnv(1)
    a = np.array([[0.5, 0.5, 0.8]])
    rec = agent_importance(env, lambda obs: a, 3, cooling_off=False)
    # first step holds the initial 0.0, later steps hold 0.8
    assert np.allclose(rec.differences[:, 0], [0.8, 0.0, 0.0])


def test_csv_outputs(tmp_path):
    rec = agent_importance(ScriptedEnv(2), seeded_policy(2, 1), 5, retain=False)
    assert rec.differences is None
    rec.to_csv(tmp_path / "scores.csv")
    rec.reward_histogram_csv(tmp_path / "hist.csv", bins=4)
    with open(tmp_path / "scores.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["score"]) for r in rows] == list(rec.scores)
    with open(tmp_path / "hist.csv") as fh:
        assert sum(int(r["count"]) for r in csv.DictReader(fh)) == 5
