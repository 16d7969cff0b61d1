"""Acting side of the learned controllers, plus checkpoint IO."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .baselines import Controller
from .nets import MLP, HistoryStack, RunningNorm, squash

CHECKPOINT_VERSION = 1
SAC_LOG_STD_MIN, SAC_LOG_STD_MAX = -5.0, 2.0


class CheckpointError(RuntimeError):
    pass


def sac_log_std(raw: np.ndarray) -> np.ndarray:
    """Smooth squeeze of the raw head output into [SAC_LOG_STD_MIN, SAC_LOG_STD_MAX]."""
    return SAC_LOG_STD_MIN + 0.5 * (SAC_LOG_STD_MAX - SAC_LOG_STD_MIN) * (np.tanh(raw) + 1.0)


class NeuralPolicy(Controller):
    """Squashed-Gaussian policy over one network per agent, or one shared network.

    ``kind`` is ``"ppo"`` (state-independent ``log_std`` vector) or ``"sac"``
    (the head emits mean and raw log-std).
    """

    def __init__(
        self,
        kind: str,
        actors: list[MLP],
        norms: list[RunningNorm],
        log_stds: list[np.ndarray] | None = None,
        history: int = 1,
        obs_dim: int | None = None,
        name: str = "policy",
    ):
        if kind not in ("ppo", "sac"):
            raise ValueError(f"unknown policy kind {kind!r}")
        self.kind = kind
        self.actors = actors
        self.norms = norms
        self.log_stds = log_stds
        self.history = history
        self.obs_dim = obs_dim if obs_dim is not None else actors[0].in_dim // history
        self.name = name
        self._stack: HistoryStack | None = None

    @property
    def shared(self) -> bool:
        return len(self.actors) == 1

    def net_for(self, agent: int) -> int:
        return 0 if self.shared else agent

    def reset(self, n_envs: int | None = None) -> None:
        self._stack = None

    def _inputs(self, obs: np.ndarray) -> np.ndarray:
        n_agents = obs.shape[-2]
        if not self.shared and n_agents != len(self.actors):
            raise ValueError(
                f"policy has {len(self.actors)} unshared networks but the district has {n_agents} agents"
            )
        if obs.shape[-1] != self.obs_dim:
            raise ValueError(f"observation has {obs.shape[-1]} features, policy expects {self.obs_dim}")
        normed = np.empty_like(obs)
        for i in range(n_agents):
            normed[..., i, :] = self.norms[self.net_for(i)](obs[..., i, :])
        if self.history == 1:
            return normed
        if self._stack is None or self._stack.buf.shape[:-2] != obs.shape[:-1]:
            self._stack = HistoryStack(self.history, self.obs_dim, obs.shape[:-1])
        return self._stack.push(normed)

    def distribution(self, x: np.ndarray, agent_net: int) -> tuple[np.ndarray, np.ndarray]:
        out = self.actors[agent_net](x)
        if self.kind == "ppo":
            return out, np.broadcast_to(self.log_stds[agent_net], out.shape)
        return out[..., :3], sac_log_std(out[..., 3:])

    def act(self, obs, deterministic=True, rng=None):
        obs = np.asarray(obs, dtype=float)
        x = self._inputs(obs)
        actions = np.empty((*obs.shape[:-1], 3))
        if self.shared:
            mu, log_std = self.distribution(x, 0)
            u = mu if deterministic else mu + np.exp(log_std) * rng.standard_normal(mu.shape)
            return squash(u)
        for i in range(obs.shape[-2]):
            mu, log_std = self.distribution(x[..., i, :], i)
            u = mu if deterministic else mu + np.exp(log_std) * rng.standard_normal(mu.shape)
            actions[..., i, :] = squash(u)
        return actions

    # checkpoints

    def save(self, path: str | Path, schema_digest: str, extra: dict | None = None) -> Path:
        path = Path(path)
        meta = {
            "version": CHECKPOINT_VERSION,
            "kind": self.kind,
            "schema": schema_digest,
            "history": self.history,
            "obs_dim": self.obs_dim,
            "n_nets": len(self.actors),
            "hidden": list(self.actors[0].hidden),
            "out_dim": self.actors[0].out_dim,
            "name": self.name,
            "extra": extra or {},
        }
        arrays = {"meta": np.array(json.dumps(meta, sort_keys=True))}
        for k, actor in enumerate(self.actors):
            for j, p in enumerate(actor.params):
                arrays[f"actor{k}_{j}"] = p
            for key, v in self.norms[k].state().items():
                arrays[f"norm{k}_{key}"] = v
            if self.log_stds is not None:
                arrays[f"log_std{k}"] = self.log_stds[k]
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "wb") as fh:
                np.savez(fh, **arrays)
        except OSError as exc:
            raise CheckpointError(f"could not write checkpoint {path}: {exc}") from exc
        return path

    @classmethod
    def load(cls, path: str | Path, schema_digest: str | None = None) -> "NeuralPolicy":
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            if meta.get("version") != CHECKPOINT_VERSION:
                raise CheckpointError(f"unsupported checkpoint version {meta.get('version')}")
            if schema_digest is not None and meta["schema"] != schema_digest:
                raise CheckpointError(
                    f"checkpoint was trained on observation schema {meta['schema']}, got {schema_digest}"
                )
            rng = np.random.default_rng(0)
            actors, norms, log_stds = [], [], []
            for k in range(meta["n_nets"]):
                actor = MLP(meta["obs_dim"] * meta["history"], tuple(meta["hidden"]), meta["out_dim"], rng)
                for j in range(len(actor.params)):
                    actor.params[j] = np.array(z[f"actor{k}_{j}"])
                actors.append(actor)
                norm = RunningNorm(meta["obs_dim"])
                norm.load({key: z[f"norm{k}_{key}"] for key in ("mean", "var", "count")})
                norm.frozen = True
                norms.append(norm)
                if f"log_std{k}" in z:
                    log_stds.append(np.array(z[f"log_std{k}"]))
        policy = cls(meta["kind"], actors, norms, log_stds or None, meta["history"], meta["obs_dim"], meta["name"])
        policy.meta = meta
        return policy
