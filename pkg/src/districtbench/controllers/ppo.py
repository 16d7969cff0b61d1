"""Independent PPO and MAPPO (centralized critic over concatenated observations)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nets import MLP, Adam, HistoryStack, NonFiniteError, RunningNorm, clip_grad_norm, gaussian_entropy, gaussian_logp, squash
from .policy import NeuralPolicy


@dataclass(frozen=True)
class PPOConfig:
    hidden: tuple[int, int] = (256, 256)
    actor_lr: float = 2.5e-3
    critic_lr: float = 2.5e-3
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip: float = 0.2
    entropy_coef: float = 0.0
    epochs: int = 4
    minibatches: int = 4
    max_grad_norm: float = 0.5
    rollout_steps: int = 8192  # env steps per update, summed over parallel envs
    critic_mode: str = "local"  # "local" (IPPO) | "concatenated" (MAPPO)
    share_params: bool = True
    history: int = 1
    init_log_std: float = -0.5

    def __post_init__(self):
        if self.critic_mode not in ("local", "concatenated"):
            raise ValueError(f"critic_mode must be 'local' or 'concatenated', got {self.critic_mode!r}")


def gae_advantages(rewards, values, dones, gamma: float, lambda_gae: float, last_value=0.0):
    """Generalized advantage estimates along axis 0.

    ``dones[t]`` marks that the episode ended after step ``t``; nothing from
    ``t + 1`` leaks into ``t`` then. ``last_value`` bootstraps the final step.
    """
    r = np.asarray(rewards, dtype=float)
    v = np.asarray(values, dtype=float)
    d = np.asarray(dones, dtype=float)
    if not (r.shape == v.shape == d.shape):
        raise ValueError(f"length mismatch: rewards {r.shape}, values {v.shape}, dones {d.shape}")
    adv = np.zeros_like(r)
    next_value = np.broadcast_to(np.asarray(last_value, dtype=float), r.shape[1:])
    running = np.zeros(r.shape[1:])
    for t in range(len(r) - 1, -1, -1):
        live = 1.0 - d[t]
        delta = r[t] + gamma * next_value * live - v[t]
        running = delta + gamma * lambda_gae * live * running
        adv[t] = running
        next_value = v[t]
    return adv, adv + v


def ppo_actor_loss(actor: MLP, log_std: np.ndarray, obs, u, logp_old, adv, clip: float, entropy_coef: float):
    """Clipped-surrogate loss with entropy bonus; returns (loss, actor grads, log_std grad, info)."""
    mu, cache = actor.forward(obs)
    logp = gaussian_logp(u, mu, log_std)
    ratio = np.exp(logp - logp_old)
    surr1 = ratio * adv
    surr2 = np.clip(ratio, 1 - clip, 1 + clip) * adv
    n = len(adv)
    entropy = gaussian_entropy(log_std)
    loss = -float(np.minimum(surr1, surr2).mean()) - entropy_coef * entropy
    if not np.isfinite(loss):
        raise NonFiniteError("non-finite PPO actor loss")
    unclipped = surr1 <= surr2
    dlogp = np.where(unclipped, -ratio * adv / n, 0.0)
    inv_var = np.exp(-2 * log_std)
    dmu = dlogp[:, None] * (u - mu) * inv_var
    dlog_std = (dlogp[:, None] * ((u - mu) ** 2 * inv_var - 1.0)).sum(0) - entropy_coef
    grads, _ = actor.backward(cache, dmu)
    info = {
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > clip)),
        "approx_kl": float(np.mean(logp_old - logp)),
        "entropy": entropy,
        "ratio_mean": float(ratio.mean()),
    }
    return loss, grads, dlog_std, info


def value_loss(critic: MLP, x, returns):
    v, cache = critic.forward(x)
    err = v[:, 0] - returns
    loss = 0.5 * float(np.mean(err**2))
    if not np.isfinite(loss):
        raise NonFiniteError("non-finite critic loss")
    grads, _ = critic.backward(cache, (err / len(err))[:, None])
    return loss, grads


class PPOLearner:
    kind = "ppo"

    def __init__(self, obs_dim: int, n_agents: int, config: PPOConfig, seed: int = 0, name: str = "ippo"):
        self.cfg = config
        self.obs_dim, self.n_agents = obs_dim, n_agents
        self.name = name
        self.rng = np.random.default_rng(seed)
        n_nets = 1 if config.share_params else n_agents
        in_dim = obs_dim * config.history
        critic_in = in_dim if config.critic_mode == "local" else in_dim * n_agents
        self.actors = [MLP(in_dim, config.hidden, 3, self.rng, out_scale=0.01) for _ in range(n_nets)]
        self.critics = [MLP(critic_in, config.hidden, 1, self.rng, out_scale=1.0) for _ in range(n_nets)]
        self.log_stds = [np.full(3, config.init_log_std) for _ in range(n_nets)]
        self.norms = [RunningNorm(obs_dim) for _ in range(n_nets)]
        self.actor_opts = [Adam(a.params + [ls], config.actor_lr) for a, ls in zip(self.actors, self.log_stds)]
        self.critic_opts = [Adam(c.params, config.critic_lr) for c in self.critics]
        self.steps = 0
        self.updates = 0
        self._buf: dict[str, list] = {}
        self._vec = None
        self._stack: HistoryStack | None = None
        self._obs = None
        self.diagnostics: list[dict] = []

    def net_for(self, agent: int) -> int:
        return 0 if len(self.actors) == 1 else agent

    def policy(self) -> NeuralPolicy:
        return NeuralPolicy("ppo", self.actors, self.norms, self.log_stds, self.cfg.history, self.obs_dim, self.name)

    # rollout

    def _featurize(self, raw_obs: np.ndarray, update_norm: bool) -> np.ndarray:
        x = np.empty_like(raw_obs)
        for k, norm in enumerate(self.norms):
            agents = list(range(self.n_agents)) if len(self.norms) == 1 else [k]
            if update_norm:
                norm.update(raw_obs[:, agents])
            x[:, agents] = norm(raw_obs[:, agents])
        if self.cfg.history == 1:
            return x
        return self._stack.push(x)

    def _critic_inputs(self, x: np.ndarray) -> np.ndarray:
        if self.cfg.critic_mode == "local":
            return x
        E, N, D = x.shape
        joint = x.reshape(E, 1, N * D)
        return np.broadcast_to(joint, (E, N, N * D)).copy()

    def _forward_agents(self, x: np.ndarray, cx: np.ndarray):
        E, N, _ = x.shape
        mu = np.empty((E, N, 3))
        values = np.empty((E, N))
        log_std = np.empty((E, N, 3))
        for k in range(len(self.actors)):
            agents = list(range(N)) if len(self.actors) == 1 else [k]
            mu[:, agents] = self.actors[k](x[:, agents])
            values[:, agents] = self.critics[k](cx[:, agents])[..., 0]
            log_std[:, agents] = self.log_stds[k]
        return mu, log_std, values

    def attach(self, vec) -> None:
        self._vec = vec
        if self.cfg.history > 1:
            self._stack = HistoryStack(self.cfg.history, self.obs_dim, (vec.n_envs, self.n_agents))
        self._obs = self._featurize(vec.reset(), update_norm=True)

    def advance(self, vec, until_step: int) -> None:
        """Collect experience until ``until_step`` env steps, updating at each full rollout."""
        if self._vec is not vec:
            self.attach(vec)
        per_update = max(1, self.cfg.rollout_steps // vec.n_envs)
        while self.steps < until_step:
            x = self._obs
            cx = self._critic_inputs(x)
            mu, log_std, values = self._forward_agents(x, cx)
            u = mu + np.exp(log_std) * self.rng.standard_normal(mu.shape)
            logp = gaussian_logp(u, mu, log_std)
            raw_next, rewards, dones = vec.step(squash(u))
            for key, val in (("x", x), ("cx", cx), ("u", u), ("logp", logp), ("v", values),
                             ("r", np.repeat(rewards[:, None], self.n_agents, 1)),
                             ("d", np.repeat(dones[:, None].astype(float), self.n_agents, 1))):
                self._buf.setdefault(key, []).append(val)
            if self._stack is not None and dones.any():
                self._stack.reset_where(dones)
            self._obs = self._featurize(raw_next, update_norm=True)
            self.steps += vec.n_envs
            if len(self._buf["x"]) >= per_update:
                self._update()

    def _update(self) -> None:
        cfg = self.cfg
        b = {k: np.stack(v) for k, v in self._buf.items()}
        self._buf = {}
        cx_last = self._critic_inputs(self._obs)
        _, _, last_v = self._forward_agents(self._obs, cx_last)
        adv, ret = gae_advantages(b["r"], b["v"], b["d"], cfg.gamma, cfg.gae_lambda, last_v)
        T, E, N = adv.shape
        diag = {"actor_loss": [], "critic_loss": [], "clip_fraction": [], "approx_kl": []}
        for k in range(len(self.actors)):
            agents = list(range(N)) if len(self.actors) == 1 else [k]
            flat = lambda a: a[:, :, agents].reshape(T * E * len(agents), *a.shape[3:])  # noqa: E731
            x, cx, u, logp, A, R = (flat(b["x"]), flat(b["cx"]), flat(b["u"]), flat(b["logp"]), flat(adv), flat(ret))
            n = len(A)
            mb = max(1, n // cfg.minibatches)
            for _ in range(cfg.epochs):
                perm = self.rng.permutation(n)
                for start in range(0, n - mb + 1, mb):
                    idx = perm[start : start + mb]
                    a_mb = A[idx]
                    a_mb = (a_mb - a_mb.mean()) / (a_mb.std() + 1e-8)
                    aloss, agrads, glog, info = ppo_actor_loss(
                        self.actors[k], self.log_stds[k], x[idx], u[idx], logp[idx], a_mb, cfg.clip, cfg.entropy_coef
                    )
                    grads, _ = clip_grad_norm(agrads + [glog], cfg.max_grad_norm)
                    self.actor_opts[k].step(grads)
                    closs, cgrads = value_loss(self.critics[k], cx[idx], R[idx])
                    cgrads, _ = clip_grad_norm(cgrads, cfg.max_grad_norm)
                    self.critic_opts[k].step(cgrads)
                    diag["actor_loss"].append(aloss)
                    diag["critic_loss"].append(closs)
                    diag["clip_fraction"].append(info["clip_fraction"])
                    diag["approx_kl"].append(info["approx_kl"])
        self.updates += 1
        self.diagnostics.append({k: float(np.mean(v)) for k, v in diag.items()} | {"step": self.steps})
