"""Robust aggregate statistics over seeds: IQM, CVaR, stratified bootstrap,
probability of improvement, rank distributions and absolute metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

LOWER = "lower"
HIGHER = "higher"


@dataclass
class RunMatrix:
    """Metric values per (algorithm, seed, eval point).

    ``values[metric]`` has shape (n_algorithms, n_seeds, n_eval_points) and
    ``absolute[metric]`` (optional) has shape (n_algorithms, n_seeds).
    """

    algorithms: list[str]
    seeds: list[int]
    eval_points: list[int]
    values: dict[str, np.ndarray]
    directions: dict[str, str] = field(default_factory=dict)
    absolute: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        shape = (len(self.algorithms), len(self.seeds), len(self.eval_points))
        for name, arr in self.values.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape != shape:
                raise ValueError(f"metric {name!r} has shape {arr.shape}, expected {shape}")
            self.values[name] = arr
        for name, arr in self.absolute.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape != shape[:2]:
                raise ValueError(f"absolute block {name!r} has shape {arr.shape}, expected {shape[:2]}")
            self.absolute[name] = arr

    def direction(self, metric: str) -> str:
        return self.directions.get(metric, LOWER)

    def samples(self, metric: str, eval_index: int = -1) -> np.ndarray:
        """(n_algorithms, n_seeds) values at one eval point."""
        return self.values[metric][:, :, eval_index]


@dataclass(frozen=True)
class StatSummary:
    point: float
    ci_low: float
    ci_high: float
    estimator: str
    n_resamples: int


def iqm(samples: Sequence[float]) -> float:
    """Mean after dropping the lowest and highest ``floor(n/4)`` samples."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = len(x)
    if n == 0:
        raise ValueError("iqm of empty input")
    k = n // 4
    return float(x[k : n - k].mean())


def cvar(samples: Sequence[float], alpha: float = 0.25, direction: str = LOWER) -> float:
    """Mean of the worst ``ceil(alpha * n)`` samples (largest when lower is better)."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = len(x)
    if n == 0:
        raise ValueError("cvar of empty input")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    k = math.ceil(alpha * n - 1e-12)
    worst = x[n - k :] if direction == LOWER else x[:k]
    return float(worst.mean())


def _iqm_rows(m: np.ndarray) -> np.ndarray:
    m = np.sort(m, axis=1)
    k = m.shape[1] // 4
    return m[:, k : m.shape[1] - k].mean(axis=1)


def _mean_rows(m: np.ndarray) -> np.ndarray:
    return m.mean(axis=1)


def _rowwise(statistic: Callable, m: np.ndarray) -> np.ndarray:
    """Apply ``statistic`` to every row of ``m``, vectorized for the common estimators."""
    fast = {iqm: _iqm_rows, np.mean: _mean_rows}
    if statistic in fast:
        return fast[statistic](m)
    return np.array([statistic(row) for row in m])


def _percentile_ci(dist: np.ndarray, level: float) -> tuple[float, float]:
    tail = (1 - level) / 2 * 100
    lo, hi = np.percentile(dist, [tail, 100 - tail])
    return float(lo), float(hi)


def bootstrap_ci(
    samples: Sequence[float],
    statistic: Callable = iqm,
    n_resamples: int = 2000,
    level: float = 0.95,
    rng: np.random.Generator | int = 0,
    name: str | None = None,
) -> StatSummary:
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        raise ValueError("bootstrap CI needs at least two runs")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    idx = rng.integers(0, len(x), size=(n_resamples, len(x)))
    dist = _rowwise(statistic, x[idx])
    lo, hi = _percentile_ci(dist, level)
    return StatSummary(statistic(x), lo, hi, name or getattr(statistic, "__name__", "statistic"), n_resamples)


def stratified_bootstrap_ci(
    matrix: RunMatrix,
    metric: str,
    statistic: Callable = iqm,
    n_resamples: int = 2000,
    level: float = 0.95,
    seed: int = 0,
    eval_index: int = -1,
    use_absolute: bool = False,
) -> dict[str, StatSummary]:
    """Percentile CI per algorithm; seeds are resampled within each algorithm."""
    data = matrix.absolute[metric] if use_absolute else matrix.samples(metric, eval_index)
    if data.shape[1] < 2:
        raise ValueError("stratified bootstrap needs at least two seeds per algorithm")
    rng = np.random.default_rng(seed)
    return {
        alg: bootstrap_ci(data[a], statistic, n_resamples, level, rng)
        for a, alg in enumerate(matrix.algorithms)
    }


def probability_of_improvement(x: Sequence[float], y: Sequence[float], direction: str = LOWER) -> float:
    """P(X improves on Y) over all pairs; ties count one half."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if len(x) == 0 or len(y) == 0:
        raise ValueError("probability of improvement needs nonempty inputs")
    diff = x[:, None] - y[None, :]
    wins = (diff < 0) if direction == LOWER else (diff > 0)
    ties = diff == 0
    return float((wins.sum() + 0.5 * ties.sum()) / (len(x) * len(y)))


def probability_of_improvement_ci(
    x: Sequence[float],
    y: Sequence[float],
    direction: str = LOWER,
    n_resamples: int = 2000,
    level: float = 0.95,
    seed: int = 0,
) -> StatSummary:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    point = probability_of_improvement(x, y, direction)
    rng = np.random.default_rng(seed)
    dist = np.empty(n_resamples)
    for k in range(n_resamples):
        xs = x[rng.integers(0, len(x), len(x))]
        ys = y[rng.integers(0, len(y), len(y))]
        dist[k] = probability_of_improvement(xs, ys, direction)
    lo, hi = _percentile_ci(dist, level)
    return StatSummary(point, lo, hi, "probability_of_improvement", n_resamples)


def rank_distribution(
    matrix: RunMatrix,
    metric: str,
    statistic: Callable = iqm,
    n_resamples: int = 2000,
    seed: int = 0,
    eval_index: int = -1,
    use_absolute: bool = False,
) -> dict[str, np.ndarray]:
    """Per-algorithm probability of holding each rank (index 0 = rank 1 = best).

    Tied algorithms share their ranks: the probability mass is spread evenly
    over the tied positions, so every row sums to one.
    """
    n_alg = len(matrix.algorithms)
    if n_alg < 2:
        raise ValueError("rank distribution needs at least two algorithms")
    data = matrix.absolute[metric] if use_absolute else matrix.samples(metric, eval_index)
    sign = 1.0 if matrix.direction(metric) == LOWER else -1.0
    rng = np.random.default_rng(seed)
    counts = np.zeros((n_alg, n_alg))
    n_seeds = data.shape[1]
    boot = np.stack(
        [_rowwise(statistic, data[a][rng.integers(0, n_seeds, (n_resamples, n_seeds))]) for a in range(n_alg)], axis=1
    )
    for stats in boot:
        keyed = sign * stats
        lo = rankdata(keyed, method="min") - 1
        hi = rankdata(keyed, method="max") - 1
        for a in range(n_alg):
            span = hi[a] - lo[a] + 1
            counts[a, int(lo[a]) : int(hi[a]) + 1] += 1.0 / span
    probs = counts / n_resamples
    return {alg: probs[a] for a, alg in enumerate(matrix.algorithms)}


def best_checkpoint_index(scores: Sequence[float]) -> int:
    """Eval point with the lowest average score (first one on ties)."""
    return int(np.argmin(np.asarray(scores, dtype=float)))


def absolute_metric(matrix: RunMatrix, metric: str) -> dict[str, float]:
    """Mean over seeds of each seed's best-checkpoint extended evaluation."""
    if metric not in matrix.absolute:
        raise KeyError(f"no absolute-evaluation block for metric {metric!r}")
    block = matrix.absolute[metric]
    return {alg: float(block[a].mean()) for a, alg in enumerate(matrix.algorithms)}


def best_per_run(values, direction: str = LOWER) -> np.ndarray:
    """Best value of each run across its evaluations, for a (runs x evals) table."""
    v = np.asarray(values, dtype=float)
    return v.min(axis=1) if direction == LOWER else v.max(axis=1)
