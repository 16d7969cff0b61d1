"""Per-agent contribution scores from no-op counterfactuals.

At every timestep each agent's action is replaced in turn by the no-op on a
clone of the environment; the agent's score is the time average of
``r_t - r_t^{-i}``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .sim import ActionTriple

NO_OP = (0.5, 0.5, 0.0)


def no_op_action(cooling_off: bool = True, previous_cooling: float = 0.0) -> ActionTriple:
    """Storages idle and cooling off. ``cooling_off=False`` holds ``previous_cooling`` instead."""
    return ActionTriple(0.5, 0.5, 0.0 if cooling_off else previous_cooling)


@dataclass
class ImportanceRecord:
    scores: np.ndarray  # (n_agents,), reward units
    T: int
    rewards: np.ndarray  # main-trajectory team rewards, (T,)
    differences: np.ndarray | None = None  # (T, n_agents) when retained
    clones_per_step: int = 0

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["agent", "score"])
            for i, s in enumerate(self.scores):
                w.writerow([i, repr(float(s))])

    def reward_histogram_csv(self, path: str | Path, bins: int = 20) -> None:
        counts, edges = np.histogram(self.rewards, bins=bins)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_low", "bin_high", "count"])
            for k, c in enumerate(counts):
                w.writerow([repr(float(edges[k])), repr(float(edges[k + 1])), int(c)])


def agent_importance(
    env,
    policy: Callable[[np.ndarray], np.ndarray],
    horizon: int,
    retain: bool = True,
    cooling_off: bool = True,
) -> ImportanceRecord:
    """Run ``horizon`` steps of ``policy`` on ``env`` while measuring every agent.

    ``env`` must expose ``observe()``, ``step(actions) -> outcome`` (with a
    ``reward`` attribute), ``clone()`` and ``n_agents``. ``policy`` maps the
    (n_agents, obs_dim) observation to an (n_agents, 3) joint action and is
    called exactly once per step, so its trajectory matches an unmeasured run.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    n = env.n_agents
    diffs = np.zeros((horizon, n))
    rewards = np.zeros(horizon)
    obs = env.observe()
    prev_cooling = np.zeros(n)
    for t in range(horizon):
        joint = np.array(policy(obs), dtype=float).reshape(n, 3)
        for i in range(n):
            try:
                clone = env.clone()
            except Exception as exc:  # noqa: BLE001
                raise RuntimeError(f"could not clone environment at t={t}") from exc
            cf = joint.copy()
            cf[i] = no_op_action(cooling_off, prev_cooling[i]).as_array()
            diffs[t, i] = -clone.step(cf).reward
        out = env.step(joint)
        rewards[t] = out.reward
        diffs[t] += out.reward
        prev_cooling = joint[:, 2].copy()
        obs = out.observations
    return ImportanceRecord(
        scores=diffs.mean(axis=0),
        T=horizon,
        rewards=rewards,
        differences=diffs if retain else None,
        clones_per_step=n,
    )
