"""Independent SAC: twin critics with soft-updated targets and automatic temperature."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nets import LOG_2, MLP, Adam, HistoryStack, NonFiniteError, RunningNorm, clip_grad_norm, log_one_minus_tanh_sq, soft_update, squash
from .policy import SAC_LOG_STD_MAX, SAC_LOG_STD_MIN, NeuralPolicy, sac_log_std


@dataclass(frozen=True)
class SACConfig:
    hidden: tuple[int, int] = (256, 256)
    lr: float = 2.5e-3
    gamma: float = 0.95
    tau: float = 0.001
    minibatch: int = 256
    buffer_size: int = 1_000_000
    learner_start: int = 23040
    actor_update_freq: int = 1
    target_entropy: float = -3.0
    init_alpha: float = 0.1
    update_every: int = 1  # env steps between gradient steps
    max_grad_norm: float = 0.0  # 0 disables clipping
    share_params: bool = True
    history: int = 1


class ReplayBuffer:
    """Ring buffer of (obs, action, reward, next_obs, done), one slot per agent."""

    def __init__(self, capacity: int, n_agents: int, obs_dim: int, act_dim: int = 3, learner_start: int = 0):
        self.capacity = int(capacity)
        self.learner_start = learner_start
        # float32 halves memory; pages are only touched once written
        self.obs = np.zeros((self.capacity, n_agents, obs_dim), dtype=np.float32)
        self.next_obs = np.zeros((self.capacity, n_agents, obs_dim), dtype=np.float32)
        self.act = np.zeros((self.capacity, n_agents, act_dim))
        self.rew = np.zeros((self.capacity, n_agents))
        self.done = np.zeros((self.capacity, n_agents))
        self.inserted = 0
        self.n_agents = n_agents

    def __len__(self) -> int:
        return min(self.inserted, self.capacity)

    def add(self, obs, act, rew, next_obs, done) -> None:
        i = self.inserted % self.capacity
        self.obs[i], self.act[i], self.next_obs[i] = obs, act, next_obs
        self.rew[i], self.done[i] = rew, done
        self.inserted += 1

    @property
    def ready(self) -> bool:
        return self.inserted >= max(self.learner_start, 1)

    def sample(self, batch: int, rng: np.random.Generator, agents: list[int] | None = None):
        """Uniform draw without replacement over (transition, agent) slots."""
        if not self.ready:
            raise RuntimeError(f"buffer holds {self.inserted} transitions, learner starts at {self.learner_start}")
        agents = list(range(self.n_agents)) if agents is None else agents
        pool = len(self) * len(agents)
        flat = rng.choice(pool, size=min(batch, pool), replace=False)
        t, j = np.divmod(flat, len(agents))
        a = np.asarray(agents)[j]
        f = lambda arr: arr[t, a].astype(float)  # noqa: E731
        return f(self.obs), f(self.act), f(self.rew), f(self.next_obs), f(self.done)


def _policy_sample(actor: MLP, obs, eps):
    """Reparameterized sample; returns (action, logp, cache for gradients)."""
    out, cache = actor.forward(obs)
    mu, raw = out[:, :3], out[:, 3:]
    log_std = sac_log_std(raw)
    std = np.exp(log_std)
    u = mu + std * eps
    logp = (-0.5 * eps**2 - log_std - 0.5 * math.log(2 * math.pi)).sum(1) - log_one_minus_tanh_sq(u).sum(1) + 3 * LOG_2
    return squash(u), logp, (cache, raw, std, u)


def sac_actor_loss(actor: MLP, q1: MLP, q2: MLP, obs, eps, alpha: float):
    """mean(alpha * logp - min(Q1, Q2)); returns (loss, actor grads, logp)."""
    action, logp, (cache, raw, std, u) = _policy_sample(actor, obs, eps)
    x = np.concatenate([obs, action], 1)
    v1, c1 = q1.forward(x)
    v2, c2 = q2.forward(x)
    qmin = np.minimum(v1, v2)[:, 0]
    n = len(obs)
    loss = float(np.mean(alpha * logp - qmin))
    if not np.isfinite(loss):
        raise NonFiniteError("non-finite SAC actor loss")
    pick1 = (v1 <= v2)[:, 0]
    _, dx1 = q1.backward(c1, (pick1 / n)[:, None])
    _, dx2 = q2.backward(c2, (~pick1 / n)[:, None])
    dq_da = (dx1 + dx2)[:, obs.shape[1]:]
    t = np.tanh(u)
    # d/du of alpha*logp - q, per sample and divided by n
    du = (alpha * 2.0 * t) / n - dq_da * 0.5 * (1 - t**2)
    dmu = du
    dlog_std = du * std * eps - alpha / n
    draw = dlog_std * 0.5 * (SAC_LOG_STD_MAX - SAC_LOG_STD_MIN) * (1 - np.tanh(raw) ** 2)
    grads, _ = actor.backward(cache, np.concatenate([dmu, draw], 1))
    return loss, grads, logp


def sac_critic_loss(q: MLP, obs, act, target):
    v, cache = q.forward(np.concatenate([obs, act], 1))
    err = v[:, 0] - target
    loss = 0.5 * float(np.mean(err**2))
    if not np.isfinite(loss):
        raise NonFiniteError("non-finite SAC critic loss")
    grads, _ = q.backward(cache, (err / len(err))[:, None])
    return loss, grads


def temperature_loss(log_alpha: float, logp, target_entropy: float) -> tuple[float, float]:
    """-mean(log_alpha * (logp + target)); zero gradient when the entropy equals the target."""
    m = float(np.mean(np.asarray(logp) + target_entropy))
    return -log_alpha * m, -m


class SACLearner:
    kind = "sac"

    def __init__(self, obs_dim: int, n_agents: int, config: SACConfig, seed: int = 0, name: str = "isac"):
        self.cfg = config
        self.obs_dim, self.n_agents = obs_dim, n_agents
        self.name = name
        self.rng = np.random.default_rng(seed)
        n_nets = 1 if config.share_params else n_agents
        in_dim = obs_dim * config.history
        self.actors = [MLP(in_dim, config.hidden, 6, self.rng, out_scale=0.01) for _ in range(n_nets)]
        self.q1 = [MLP(in_dim + 3, config.hidden, 1, self.rng, out_scale=1.0) for _ in range(n_nets)]
        self.q2 = [MLP(in_dim + 3, config.hidden, 1, self.rng, out_scale=1.0) for _ in range(n_nets)]
        self.q1_targ = [q.clone() for q in self.q1]
        self.q2_targ = [q.clone() for q in self.q2]
        self.log_alpha = [math.log(config.init_alpha) for _ in range(n_nets)]
        self.norms = [RunningNorm(obs_dim) for _ in range(n_nets)]
        self.actor_opts = [Adam(a.params, config.lr) for a in self.actors]
        self.critic_opts = [Adam(a.params + b.params, config.lr) for a, b in zip(self.q1, self.q2)]
        self.alpha_opts = [Adam([np.zeros(1)], config.lr) for _ in range(n_nets)]
        self.buffer = ReplayBuffer(
            config.buffer_size, n_agents, in_dim, 3, config.learner_start
        )
        self.steps = 0
        self.critic_updates = 0
        self._vec = None
        self._stack: HistoryStack | None = None
        self._obs = None
        self.diagnostics: list[dict] = []

    def policy(self) -> NeuralPolicy:
        return NeuralPolicy("sac", self.actors, self.norms, None, self.cfg.history, self.obs_dim, self.name)

    def _agents_of(self, k: int) -> list[int]:
        return list(range(self.n_agents)) if len(self.actors) == 1 else [k]

    def _normalize(self, raw: np.ndarray, k: int) -> np.ndarray:
        """Normalize a (..., history * obs_dim) batch with network ``k``'s statistics."""
        shp = raw.shape
        return self.norms[k](raw.reshape(*shp[:-1], self.cfg.history, self.obs_dim)).reshape(shp)

    def _observe_raw(self, raw_obs: np.ndarray) -> np.ndarray:
        for k, norm in enumerate(self.norms):
            norm.update(raw_obs[:, self._agents_of(k)])
        if self._stack is None:
            return raw_obs.copy()
        return self._stack.push(raw_obs)

    def attach(self, vec) -> None:
        self._vec = vec
        self._stack = None
        if self.cfg.history > 1:
            self._stack = HistoryStack(self.cfg.history, self.obs_dim, (vec.n_envs, self.n_agents))
        self._obs = self._observe_raw(vec.reset())

    def _act(self, raw: np.ndarray) -> np.ndarray:
        E, N, _ = raw.shape
        out = np.empty((E, N, 3))
        for k in range(len(self.actors)):
            agents = self._agents_of(k)
            xs = self._normalize(raw[:, agents].reshape(-1, raw.shape[-1]), k)
            eps = self.rng.standard_normal((len(xs), 3))
            a, _, _ = _policy_sample(self.actors[k], xs, eps)
            out[:, agents] = a.reshape(E, len(agents), 3)
        return out

    def advance(self, vec, until_step: int) -> None:
        if self._vec is not vec:
            self.attach(vec)
        while self.steps < until_step:
            x = self._obs
            if self.buffer.inserted < self.cfg.learner_start:
                actions = self.rng.random((vec.n_envs, self.n_agents, 3))
            else:
                actions = self._act(x)
            raw_next, rewards, dones = vec.step(actions)
            if self._stack is not None:
                # a finished episode's stack still holds its frames at this point
                nxt = np.concatenate([self._stack.output()[..., self.obs_dim :], raw_next], -1)
            else:
                nxt = raw_next
            for e in range(vec.n_envs):
                self.buffer.add(x[e], actions[e], rewards[e], nxt[e], float(dones[e]))
            if self._stack is not None and dones.any():
                self._stack.reset_where(dones)
            self._obs = self._observe_raw(raw_next)
            for _ in range(vec.n_envs):
                self.steps += 1
                if self.buffer.ready and self.steps % self.cfg.update_every == 0:
                    self.update()

    def update(self) -> dict:
        cfg = self.cfg
        info = {}
        self.critic_updates += 1
        do_actor = self.critic_updates % cfg.actor_update_freq == 0
        for k in range(len(self.actors)):
            agents = None if len(self.actors) == 1 else [k]
            obs, act, rew, nobs, done = self.buffer.sample(cfg.minibatch, self.rng, agents)
            obs, nobs = self._normalize(obs, k), self._normalize(nobs, k)
            alpha = math.exp(self.log_alpha[k])
            n = len(obs)
            na, nlogp, _ = _policy_sample(self.actors[k], nobs, self.rng.standard_normal((n, 3)))
            xn = np.concatenate([nobs, na], 1)
            qt = np.minimum(self.q1_targ[k](xn), self.q2_targ[k](xn))[:, 0] - alpha * nlogp
            y = rew + cfg.gamma * (1.0 - done) * qt
            l1, g1 = sac_critic_loss(self.q1[k], obs, act, y)
            l2, g2 = sac_critic_loss(self.q2[k], obs, act, y)
            grads, _ = clip_grad_norm(g1 + g2, cfg.max_grad_norm)
            self.critic_opts[k].step(grads)
            info["critic_loss"] = (l1 + l2) / 2
            if do_actor:
                aloss, agrads, logp = sac_actor_loss(
                    self.actors[k], self.q1[k], self.q2[k], obs, self.rng.standard_normal((n, 3)), alpha
                )
                agrads, _ = clip_grad_norm(agrads, cfg.max_grad_norm)
                self.actor_opts[k].step(agrads)
                tloss, tgrad = temperature_loss(self.log_alpha[k], logp, cfg.target_entropy)
                p = np.array([self.log_alpha[k]])
                self.alpha_opts[k].params = [p]
                self.alpha_opts[k].step([np.array([tgrad])])
                self.log_alpha[k] = float(p[0])
                info.update(actor_loss=aloss, alpha=alpha, entropy=-float(logp.mean()))
            soft_update(self.q1_targ[k], self.q1[k], cfg.tau)
            soft_update(self.q2_targ[k], self.q2[k], cfg.tau)
        if self.critic_updates % 1000 == 0:
            self.diagnostics.append(info | {"step": self.steps})
        return info
