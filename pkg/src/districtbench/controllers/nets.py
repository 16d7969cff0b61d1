"""Small numpy networks with hand-written reverse-mode gradients."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOG_2PI = math.log(2 * math.pi)
LOG_2 = math.log(2.0)


class NonFiniteError(FloatingPointError):
    pass


def _check_finite(name: str, a: np.ndarray) -> None:
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"non-finite values in {name}")


class MLP:
    """Two tanh hidden layers and a linear head.

    ``params`` is the list ``[W1, b1, W2, b2, W3, b3]``; weights are stored
    (fan_in, fan_out) so that ``y = x @ W + b``.
    """

    def __init__(self, in_dim: int, hidden: tuple[int, int], out_dim: int, rng: np.random.Generator, out_scale: float = 0.01):
        if len(hidden) != 2:
            raise ValueError("exactly two hidden layers are supported")
        sizes = [in_dim, *hidden, out_dim]
        self.params: list[np.ndarray] = []
        for k in range(3):
            fan_in, fan_out = sizes[k], sizes[k + 1]
            scale = out_scale if k == 2 else 1.0
            W = rng.normal(0.0, scale * math.sqrt(1.0 / fan_in), (fan_in, fan_out))
            self.params += [W, np.zeros(fan_out)]
        self.in_dim, self.hidden, self.out_dim = in_dim, tuple(hidden), out_dim

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        W1, b1, W2, b2, W3, b3 = self.params
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"input has {x.shape[-1]} features, network expects {self.in_dim}")
        h1 = np.tanh(x @ W1 + b1)
        h2 = np.tanh(h1 @ W2 + b2)
        y = h2 @ W3 + b3
        _check_finite("network output", y)
        return y, (x, h1, h2)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache: tuple, dy: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        """Gradients of ``sum(dy * y)`` with respect to the parameters and the input."""
        x, h1, h2 = cache
        W1, _, W2, _, W3, _ = self.params
        dy = dy.reshape(-1, self.out_dim)
        x2 = x.reshape(-1, self.in_dim)
        h1 = h1.reshape(-1, h1.shape[-1])
        h2 = h2.reshape(-1, h2.shape[-1])
        gW3 = h2.T @ dy
        gb3 = dy.sum(0)
        dz2 = (dy @ W3.T) * (1 - h2**2)
        gW2 = h1.T @ dz2
        gb2 = dz2.sum(0)
        dz1 = (dz2 @ W2.T) * (1 - h1**2)
        gW1 = x2.T @ dz1
        gb1 = dz1.sum(0)
        dx = dz1 @ W1.T
        grads = [gW1, gb1, gW2, gb2, gW3, gb3]
        for g in grads:
            _check_finite("gradient", g)
        return grads, dx.reshape(x.shape)

    def copy_from(self, other: "MLP") -> None:
        for p, q in zip(self.params, other.params):
            p[...] = q

    def clone(self) -> "MLP":
        new = object.__new__(MLP)
        new.in_dim, new.hidden, new.out_dim = self.in_dim, self.hidden, self.out_dim
        new.params = [p.copy() for p in self.params]
        return new


def soft_update(target: MLP, online: MLP, tau: float) -> None:
    for pt, po in zip(target.params, online.params):
        pt *= 1.0 - tau
        pt += tau * po


def global_norm(grads: list[np.ndarray]) -> float:
    return float(math.sqrt(sum(float((g * g).sum()) for g in grads)))


def clip_grad_norm(grads: list[np.ndarray], max_norm: float) -> tuple[list[np.ndarray], float]:
    norm = global_norm(grads)
    if max_norm > 0 and norm > max_norm:
        grads = [g * (max_norm / (norm + 1e-12)) for g in grads]
    return grads, norm


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1 - self.b1**self.t
        c2 = 1 - self.b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class RunningNorm:
    """Running mean/variance observation normalizer (parallel-update formula)."""

    def __init__(self, dim: int, clip: float = 10.0):
        self.mean = np.zeros(dim)
        self.var = np.ones(dim)
        self.count = 1e-4
        self.clip = clip
        self.frozen = False

    def update(self, x: np.ndarray) -> None:
        if self.frozen:
            return
        x = x.reshape(-1, self.mean.shape[0])
        bm, bv, bc = x.mean(0), x.var(0), x.shape[0]
        delta = bm - self.mean
        tot = self.count + bc
        self.mean = self.mean + delta * bc / tot
        m2 = self.var * self.count + bv * bc + delta**2 * self.count * bc / tot
        self.var = m2 / tot
        self.count = tot

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.clip((x - self.mean) / np.sqrt(self.var + 1e-8), -self.clip, self.clip)

    def state(self) -> dict[str, np.ndarray]:
        return {"mean": self.mean, "var": self.var, "count": np.array(self.count)}

    def load(self, d: dict) -> None:
        self.mean = np.array(d["mean"], dtype=float)
        self.var = np.array(d["var"], dtype=float)
        self.count = float(d["count"])


class HistoryStack:
    """Concatenation of the last ``k`` observations, zero-padded at episode start."""

    def __init__(self, k: int, base_dim: int, lead_shape: tuple[int, ...] = ()):
        if k < 1:
            raise ValueError("history window must be >= 1")
        self.k, self.base_dim = k, base_dim
        self.buf = np.zeros((*lead_shape, k, base_dim))

    @property
    def dim(self) -> int:
        return self.k * self.base_dim

    def reset(self, obs: np.ndarray | None = None) -> np.ndarray:
        self.buf[...] = 0.0
        if obs is not None:
            return self.push(obs)
        return self.output()

    def reset_where(self, mask: np.ndarray) -> None:
        self.buf[mask] = 0.0

    def push(self, obs: np.ndarray) -> np.ndarray:
        self.buf = np.roll(self.buf, -1, axis=-2)
        self.buf[..., -1, :] = obs
        return self.output()

    def output(self) -> np.ndarray:
        return self.buf.reshape(*self.buf.shape[:-2], self.dim).copy()


# squashed Gaussian on the (0, 1) action box: action = (tanh(u) + 1) / 2

def squash(u: np.ndarray) -> np.ndarray:
    return 0.5 * (np.tanh(u) + 1.0)


def log_one_minus_tanh_sq(u: np.ndarray) -> np.ndarray:
    """Stable ``log(1 - tanh(u)^2)``."""
    return 2.0 * (LOG_2 - u - np.logaddexp(0.0, -2.0 * u))


def gaussian_logp(u: np.ndarray, mu: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    z = (u - mu) * np.exp(-log_std)
    return (-0.5 * z * z - log_std - 0.5 * LOG_2PI).sum(-1)


def squashed_logp(u: np.ndarray, mu: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """Log-density of the (0, 1) action produced from pre-squash sample ``u``."""
    return gaussian_logp(u, mu, log_std) - log_one_minus_tanh_sq(u).sum(-1) + u.shape[-1] * LOG_2


def gaussian_entropy(log_std: np.ndarray) -> float:
    return float((log_std + 0.5 * (LOG_2PI + 1.0)).sum())


@dataclass
class FlatView:
    """Helpers to treat a parameter list as one vector (used by gradient checks)."""

    params: list[np.ndarray]

    def size(self) -> int:
        return sum(p.size for p in self.params)

    def locate(self, k: int) -> tuple[int, tuple]:
        for i, p in enumerate(self.params):
            if k < p.size:
                return i, np.unravel_index(k, p.shape)
            k -= p.size
        raise IndexError(k)
