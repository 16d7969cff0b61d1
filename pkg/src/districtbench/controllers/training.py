"""Synchronous vectorized rollouts, evaluation and the train-evaluate loop."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..battery import battery_kpis
from ..data import DatasetBundle, ObservationSchema
from ..kpi import KPI_KEYS, EpisodeTrace, KpiReport, average_score, compute_kpis, normalize_kpis
from ..sim import DistrictModel, RewardWeights, SimConfig, reset, step
from .nets import RunningNorm
from .baselines import Controller, NoControlController, RandomController, RuleBasedController
from .policy import NeuralPolicy
from .ppo import PPOConfig, PPOLearner
from .sac import SACConfig, SACLearner

EVAL_SEED_OFFSET = 1_000_000
ABSOLUTE_SEED_OFFSET = 2_000_000

# metric name -> direction; anything unlisted is lower-is-better
METRIC_DIRECTIONS = {
    "zero_net_energy": "higher",
    "avg_discharge_duration": "higher",
    "episode_reward": "higher",
}

ALGORITHMS = {
    "ippo": ("ppo", {"critic_mode": "local"}),
    "mappo": ("ppo", {"critic_mode": "concatenated"}),
    "isac": ("sac", {}),
    "ippo_hist": ("ppo", {"critic_mode": "local", "history": 4}),
    "mappo_hist": ("ppo", {"critic_mode": "concatenated", "history": 4}),
    "isac_hist": ("sac", {"history": 4}),
    "rbc": ("rbc", {}),
    "random": ("random", {}),
    "no_control": ("no_control", {}),
}
LEARNERS = ("ppo", "sac")


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def from_name(cls, name: str, overrides: dict | None = None, base: str | None = None) -> "AlgorithmSpec":
        key = base or name
        if key not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {key!r}; known: {sorted(ALGORITHMS)}")
        kind, params = ALGORITHMS[key]
        return cls(name, kind, {**params, **(overrides or {})})

    def config(self):
        if self.kind == "ppo":
            return _build(PPOConfig, self.params)
        if self.kind == "sac":
            return _build(SACConfig, self.params)
        return None

    def config_hash(self) -> str:
        blob = json.dumps({"kind": self.kind, "params": self.params}, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _build(cls, params: dict):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(params) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    p = dict(params)
    if "hidden" in p:
        p["hidden"] = tuple(p["hidden"])
    return cls(**p)


@dataclass(frozen=True)
class Schedule:
    total_steps: int
    eval_interval: int
    eval_episodes: int
    absolute_episodes: int | None = None
    n_envs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.total_steps < 1 or self.eval_interval < 1 or self.eval_episodes < 1:
            raise ValueError("total_steps, eval_interval and eval_episodes must be positive")
        if self.absolute_episodes is not None and self.absolute_episodes != 10 * self.eval_episodes:
            raise ValueError(
                f"absolute evaluation uses 10x the standard episodes ({10 * self.eval_episodes}), got {self.absolute_episodes}"
            )

    @property
    def n_absolute(self) -> int:
        return 10 * self.eval_episodes if self.absolute_episodes is None else self.absolute_episodes

    def eval_points(self) -> list[int]:
        pts = list(range(0, self.total_steps, self.eval_interval))
        return pts + [self.total_steps]


class VecEnv:
    """``n_envs`` copies of one district stepped in lockstep, with auto-reset."""

    def __init__(self, model: DistrictModel, n_envs: int, seed: int):
        self.model = model
        self.n_envs = n_envs
        self._seeds = np.random.default_rng(seed)
        self.states = [None] * n_envs
        self.episodes = 0

    def _new_state(self):
        st, obs = reset(self.model, seed=int(self._seeds.integers(2**31)))
        self.episodes += 1
        return st, obs

    def reset(self) -> np.ndarray:
        obs = []
        for e in range(self.n_envs):
            self.states[e], o = self._new_state()
            obs.append(o)
        return np.stack(obs)

    def step(self, actions: np.ndarray):
        obs, rewards, dones = [], np.zeros(self.n_envs), np.zeros(self.n_envs, dtype=bool)
        for e, st in enumerate(self.states):
            out = step(st, actions[e])
            rewards[e] = out.reward
            if out.done:
                dones[e] = True
                self.states[e], o = self._new_state()
            else:
                o = out.observations
            obs.append(o)
        return np.stack(obs), rewards, dones


def make_model(
    bundle: DatasetBundle,
    schema: ObservationSchema | None = None,
    sim_config: SimConfig = SimConfig(),
    weights: RewardWeights = RewardWeights(),
) -> DistrictModel:
    return DistrictModel(bundle, weights=weights, schema=schema, config=sim_config)


def make_controller(spec: AlgorithmSpec, model: DistrictModel, seed: int = 0):
    """Baseline controller or learner for ``spec`` on ``model``."""
    nominal = model.cooling_nominal
    if spec.kind == "rbc":
        return RuleBasedController(model.schema, nominal)
    if spec.kind == "random":
        return RandomController(seed)
    if spec.kind == "no_control":
        return NoControlController(model.schema, nominal)
    if spec.kind == "ppo":
        return PPOLearner(len(model.schema), model.n, spec.config(), seed, spec.name)
    if spec.kind == "sac":
        return SACLearner(len(model.schema), model.n, spec.config(), seed, spec.name)
    raise ValueError(f"unknown controller kind {spec.kind!r}")


def run_episode(model: DistrictModel, controller: Controller, seed: int, deterministic: bool = True):
    state, obs = reset(model, seed=seed)
    controller.reset()
    rng = np.random.default_rng(seed)
    outcomes = []
    while not state.done:
        actions = controller.act(obs, deterministic=deterministic, rng=rng)
        out = step(state, actions)
        outcomes.append(out)
        obs = out.observations
    return outcomes


class BaselineCache:
    """No-control KPI reports per episode seed, used to normalize scores."""

    def __init__(self, model: DistrictModel):
        self.model = model
        self.controller = NoControlController(model.schema, model.cooling_nominal)
        self._cache: dict[int, KpiReport] = {}

    def __call__(self, seed: int) -> KpiReport:
        if seed not in self._cache:
            trace = EpisodeTrace.from_outcomes(self.model, run_episode(self.model, self.controller, seed))
            self._cache[seed] = compute_kpis(trace)
        return self._cache[seed]


def episode_metrics(model: DistrictModel, outcomes, baseline: KpiReport) -> dict[str, float]:
    trace = EpisodeTrace.from_outcomes(model, outcomes)
    report = compute_kpis(trace)
    norm = normalize_kpis(report, baseline)
    out = dict(report.as_dict())
    out.update({f"norm_{k}": v for k, v in norm.items()})
    out["average_score"] = average_score(norm)
    out["episode_reward"] = float(trace.rewards.sum())
    dods, durs = [], []
    for b in range(model.n):
        bk = battery_kpis(trace.elec_soc[:, b], model.capacity[b])
        dods.append(bk["avg_dod"])
        durs.append(bk["avg_discharge_duration"])
    out["avg_dod"] = float(np.mean(dods))
    out["avg_discharge_duration"] = float(np.mean(durs))
    return out


def evaluate(
    model: DistrictModel,
    controller: Controller,
    episodes: int,
    seed_offset: int = EVAL_SEED_OFFSET,
    baseline: BaselineCache | None = None,
    deterministic: bool = True,
) -> dict[str, float]:
    """Mean metrics over ``episodes`` fresh episodes with fixed seeds."""
    baseline = baseline or BaselineCache(model)
    rows = []
    for k in range(episodes):
        seed = seed_offset + k
        rows.append(episode_metrics(model, run_episode(model, controller, seed, deterministic), baseline(seed)))
    return {key: float(np.mean([r[key] for r in rows])) for key in rows[0]}


@dataclass
class RunResult:
    algorithm: str
    config_hash: str
    seed: int
    eval_steps: list[int]
    evals: list[dict[str, float]]
    best_index: int
    absolute: dict[str, float]
    checkpoints: list[str]
    wallclock: float
    policy: object = None

    def final(self, metric: str = "average_score") -> float:
        return self.evals[-1][metric]


def train_run(
    spec: AlgorithmSpec,
    bundle: DatasetBundle,
    schedule: Schedule,
    out_dir: str | Path | None = None,
    sim_config: SimConfig = SimConfig(),
    schema: ObservationSchema | None = None,
    weights: RewardWeights = RewardWeights(),
    absolute: bool = True,
    log=None,
) -> RunResult:
    """Train (if the controller learns) and evaluate at every schedule point.

    Evaluation is deterministic on fixed fresh episode seeds. The best eval
    point (lowest average score) is re-evaluated on 10x the episodes.
    """
    t0 = time.perf_counter()
    model = make_model(bundle, schema, sim_config, weights)
    eval_model = make_model(bundle, schema, dataclasses.replace(sim_config, obs_noise_std=0.0), weights)
    baseline = BaselineCache(eval_model)
    controller = make_controller(spec, model, schedule.seed)
    learns = spec.kind in LEARNERS
    vec = VecEnv(model, schedule.n_envs, schedule.seed) if learns else None
    ckpt_dir = Path(out_dir) / "checkpoints" if out_dir is not None else None
    steps, evals, ckpts, snapshots = [], [], [], []
    for point in schedule.eval_points():
        if learns:
            controller.advance(vec, point)
            policy = controller.policy()
        else:
            policy = controller
        if not learns and evals:
            metrics = dict(evals[-1])  # non-learning controllers do not change between points
        else:
            metrics = evaluate(eval_model, policy, schedule.eval_episodes, EVAL_SEED_OFFSET, baseline)
        steps.append(point)
        evals.append(metrics)
        if learns:
            snapshots.append(_snapshot(policy))
            if ckpt_dir is not None:
                path = policy.save(ckpt_dir / f"step_{point:09d}.npz", model.schema.digest(), {"step": point, "n_agents": model.n})
                ckpts.append(str(path))
        if log:
            log(f"{spec.name} seed={schedule.seed} step={point} score={metrics['average_score']:.4f}")
    best = int(np.argmin([m["average_score"] for m in evals]))
    abs_metrics: dict[str, float] = {}
    final_policy = controller.policy() if learns else controller
    if absolute:
        best_policy = snapshots[best] if learns else controller
        abs_metrics = evaluate(eval_model, best_policy, schedule.n_absolute, ABSOLUTE_SEED_OFFSET, baseline)
    return RunResult(
        algorithm=spec.name,
        config_hash=spec.config_hash(),
        seed=schedule.seed,
        eval_steps=steps,
        evals=evals,
        best_index=best,
        absolute=abs_metrics,
        checkpoints=ckpts,
        wallclock=time.perf_counter() - t0,
        policy=final_policy,
    )


def _snapshot(policy: NeuralPolicy) -> NeuralPolicy:
    """Deep copy of a policy's acting parameters."""
    norms = []
    for n in policy.norms:
        c = RunningNorm(len(n.mean))
        c.load(n.state())
        c.frozen = True
        norms.append(c)
    log_stds = [ls.copy() for ls in policy.log_stds] if policy.log_stds is not None else None
    return NeuralPolicy(policy.kind, [a.clone() for a in policy.actors], norms, log_stds, policy.history, policy.obs_dim, policy.name)
