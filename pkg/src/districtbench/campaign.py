"""Sweeps, benchmarks, evaluations and report emission."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import itertools
import json
import logging
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import stats
from .controllers.policy import NeuralPolicy
from .controllers.training import (
    ABSOLUTE_SEED_OFFSET,
    EVAL_SEED_OFFSET,
    LEARNERS,
    METRIC_DIRECTIONS,
    AlgorithmSpec,
    BaselineCache,
    Schedule,
    evaluate,
    make_model,
    train_run,
)
from .data import DatasetBundle, ObservationSchema, generate_synthetic_dataset, load_dataset, mask_forecast_features
from .importance import agent_importance
from .kpi import KPI_KEYS, minmax_normalize_matrix
from .sim import DistrictEnv, RewardWeights, SimConfig

log = logging.getLogger("districtbench")

BENCHMARK_SEEDS = [1, 100, 432, 700, 1500, 1800, 4000, 6200, 7000, 8000]
SWEEP_SEEDS = [1, 100, 432]

# hyperparameter grids searched before benchmarking
PPO_SWEEP_GRID = {
    "epochs": [2, 4, 8],
    "lr": [1e-4, 2.5e-4, 5e-4],
    "clip": [0.2, 0.1, 0.05],
    "entropy_coef": [0.0, 1e-2, 1e-5],
    "max_grad_norm": [0.5, 5.0, 10.0],
    "minibatches": [2, 4, 8],
    "hidden": [[128, 128], [256, 256]],
}
SAC_SWEEP_GRID = {
    "minibatch": [64, 128, 256, 512],
    "lr": [1e-4, 2.5e-4, 5e-4],
    "buffer_size": [1_000_000, 5_000_000],
    "actor_update_freq": [1, 2, 4],
    "learner_start": [23040, 46080],
    "hidden": [[128, 128], [256, 256]],
}

SCALES = {
    "desk": {
        "schedule": {"total_steps": 200_000, "eval_interval": 20_000, "eval_episodes": 8, "absolute_episodes": 80},
        "seeds": BENCHMARK_SEEDS[:5],
        "sim": {"soc_jitter": 0.2},
        "overrides": {
            "ppo": {"hidden": [64, 64], "actor_lr": 3e-4, "critic_lr": 1e-3, "rollout_steps": 2048},
            "sac": {"hidden": [64, 64], "lr": 5e-4, "tau": 0.005, "buffer_size": 200_000, "update_every": 4},
        },
    },
    "paper": {
        "schedule": {"total_steps": 6_000_000, "eval_interval": 81_920, "eval_episodes": 64, "absolute_episodes": 640},
        "seeds": BENCHMARK_SEEDS,
        "sim": {"soc_jitter": 0.2},
        "overrides": {"ppo": {}, "sac": {}},
    },
}


class CampaignError(RuntimeError):
    pass


def _expand_lr(kind: str, params: dict) -> dict:
    """The sweep's single ``lr`` axis drives both PPO optimizers."""
    p = dict(params)
    if kind == "ppo" and "lr" in p:
        lr = p.pop("lr")
        p.setdefault("actor_lr", lr)
        p.setdefault("critic_lr", lr)
    return p


@dataclass
class CampaignConfig:
    algorithms: list[dict] = field(default_factory=lambda: [{"name": "ippo"}, {"name": "isac"}, {"name": "random"}])
    dataset: dict = field(default_factory=lambda: {"synthetic": {"seed": 0, "n_buildings": 2, "T": 168}})
    seeds: list[int] = field(default_factory=lambda: list(SCALES["desk"]["seeds"]))
    schedule: dict = field(default_factory=lambda: dict(SCALES["desk"]["schedule"]))
    scale: str = "desk"
    sim: dict = field(default_factory=lambda: dict(SCALES["desk"]["sim"]))
    sweep: dict = field(default_factory=dict)
    out_dir: str = "campaign_out"
    stats_seed: int = 0
    n_resamples: int = 2000
    workers: int = 1
    eval_agents: int | None = None
    mask_leads: list[int] = field(default_factory=list)
    selection: str | None = None  # sweep selection file applied on top of algorithm params

    def __post_init__(self):
        if len(set(self.seeds)) != len(self.seeds):
            raise CampaignError(f"seeds must be distinct, got {self.seeds}")
        if self.scale not in SCALES:
            raise CampaignError(f"unknown scale {self.scale!r}")

    @classmethod
    def from_json(cls, path: str | Path) -> "CampaignConfig":
        with open(path) as fh:
            raw = json.load(fh)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "CampaignConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - names
        if unknown:
            raise CampaignError(f"unknown config keys: {sorted(unknown)}")
        scale = raw.get("scale", "desk")
        base = {"schedule": dict(SCALES[scale]["schedule"]), "seeds": list(SCALES[scale]["seeds"]), "sim": dict(SCALES[scale]["sim"])}
        merged = {**base, **raw}
        user_sched = raw.get("schedule", {})
        merged["schedule"] = {**base["schedule"], **user_sched}
        if "eval_episodes" in user_sched and "absolute_episodes" not in user_sched:
            merged["schedule"]["absolute_episodes"] = 10 * user_sched["eval_episodes"]
        return cls(**merged)

    def with_scale(self, scale: str) -> "CampaignConfig":
        """Switch to a scale preset's schedule, seeds and simulator settings."""
        preset = SCALES[scale]
        return dataclasses.replace(
            self, scale=scale, schedule=dict(preset["schedule"]), seeds=list(preset["seeds"]), sim=dict(preset["sim"])
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    # derived objects

    def bundle(self, n_buildings: int | None = None) -> DatasetBundle:
        ds = self.dataset
        if "path" in ds:
            bundle = load_dataset(ds["path"])
            if n_buildings is not None:
                if n_buildings > bundle.n_buildings:
                    raise CampaignError(f"dataset has {bundle.n_buildings} buildings, {n_buildings} requested")
                bundle = bundle.select_buildings(range(n_buildings))
            return bundle
        syn = dict(ds.get("synthetic", {}))
        if n_buildings is not None:
            syn["n_buildings"] = n_buildings
        return generate_synthetic_dataset(
            seed=syn.get("seed", 0),
            n_buildings=syn.get("n_buildings", 2),
            T=syn.get("T", 168),
            forecast_noise_std=syn.get("forecast_noise_std", 0.0),
        )

    def schema(self) -> ObservationSchema:
        return mask_forecast_features(None, self.mask_leads) if self.mask_leads else ObservationSchema()

    def sim_config(self) -> SimConfig:
        return SimConfig(**self.sim)

    def schedule_for(self, seed: int, sched: dict | None = None) -> Schedule:
        return Schedule(**{**(sched or self.schedule), "seed": seed})

    def algorithm_specs(self) -> list[AlgorithmSpec]:
        selection = {}
        if self.selection:
            with open(self.selection) as fh:
                selection = {k: v["params"] for k, v in json.load(fh)["selected"].items()}
        specs = []
        for entry in self.algorithms:
            name = entry["name"]
            base = entry.get("base")
            kind = AlgorithmSpec.from_name(name, base=base).kind
            params = dict(SCALES[self.scale]["overrides"].get(kind, {}))
            params.update(_expand_lr(kind, selection.get(name, {})))
            params.update(_expand_lr(kind, entry.get("params", {})))
            specs.append(AlgorithmSpec.from_name(name, params if kind in LEARNERS else {}, base=base))
        return specs


def env_schema_hash(schema: ObservationSchema, bundle: DatasetBundle, weights: RewardWeights = RewardWeights()) -> str:
    blob = json.dumps(
        {"features": list(schema.features), "n_buildings": bundle.n_buildings, "T": bundle.T, "weights": dataclasses.asdict(weights)},
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


# records


def run_records(result, schema_hash: str) -> list[dict]:
    rows = []
    for step, metrics in zip(result.eval_steps, result.evals):
        for name in sorted(metrics):
            rows.append(_record(result, schema_hash, step, "eval", name, metrics[name]))
    best_step = result.eval_steps[result.best_index]
    for name in sorted(result.absolute):
        rows.append(_record(result, schema_hash, best_step, "absolute", name, result.absolute[name]))
    return rows


def _record(result, schema_hash, step, phase, metric, value) -> dict:
    return {
        "algorithm": result.algorithm,
        "config_hash": result.config_hash,
        "schema_hash": schema_hash,
        "seed": result.seed,
        "eval_step": int(step),
        "phase": phase,
        "metric": metric,
        "value": float(value),
    }


def write_jsonl(path: Path, rows: list[dict]) -> None:
    with open(path, "w") as fh:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def read_records(root: str | Path) -> list[dict]:
    rows = []
    for path in sorted(Path(root).rglob("records.jsonl")):
        with open(path) as fh:
            rows.extend(json.loads(line) for line in fh if line.strip())
    return rows


def run_dir_name(spec: AlgorithmSpec, seed: int) -> str:
    return f"{spec.name}__{spec.config_hash()}__seed{seed}"


def _run_cell(args) -> dict:
    """One (algorithm, seed) cell; owns its run directory exclusively."""
    spec, cfg_dict, seed, run_dir, sched, absolute = args
    cfg = CampaignConfig.from_dict(cfg_dict)
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    manifest = {"algorithm": spec.name, "config_hash": spec.config_hash(), "seed": seed, "params": spec.params, "started": started}
    try:
        bundle = cfg.bundle()
        schema = cfg.schema()
        result = train_run(
            spec, bundle, cfg.schedule_for(seed, sched), run_dir, cfg.sim_config(), schema, absolute=absolute,
            log=log.info,
        )
        shash = env_schema_hash(schema, bundle)
        write_jsonl(run_dir / "records.jsonl", run_records(result, shash))
        manifest.update(status="ok", schema_hash=shash, wallclock=result.wallclock, best_step=result.eval_steps[result.best_index])
        out = {"status": "ok", "final_score": result.final(), "result": result}
        if result.policy is not None and spec.kind in LEARNERS:
            result.policy.save(run_dir / "final.npz", schema.digest(), {"n_agents": bundle.n_buildings, "step": result.eval_steps[-1]})
        out["result"] = dataclasses.replace(result, policy=None)
    except Exception as exc:  # crash isolation: record and move on
        manifest.update(status="failed", error=repr(exc), traceback=traceback.format_exc())
        out = {"status": "failed", "error": repr(exc)}
    manifest["finished"] = time.time()
    with open(run_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    return out


def _run_cells(cells: list, workers: int) -> list[dict]:
    if workers <= 1:
        return [_run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_cell, cells))


def cmd_benchmark(cfg: CampaignConfig) -> dict:
    """Run every algorithm x seed cell. Returns a summary with any failures."""
    out = Path(cfg.out_dir)
    runs = out / "runs"
    specs = cfg.algorithm_specs()
    cells = [
        (spec, cfg.to_dict(), seed, str(runs / run_dir_name(spec, seed)), None, True) for spec in specs for seed in cfg.seeds
    ]
    results = _run_cells(cells, cfg.workers)
    summary = {"cells": [], "failed": 0}
    for (spec, _, seed, run_dir, _, _), res in zip(cells, results):
        summary["cells"].append({"algorithm": spec.name, "seed": seed, "run_dir": run_dir, "status": res["status"]})
        if res["status"] != "ok":
            summary["failed"] += 1
            log.warning("run %s seed %s failed: %s", spec.name, seed, res.get("error"))
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "campaign.json", "w") as fh:
        json.dump({"config": cfg.to_dict(), "summary": summary}, fh, indent=2, sort_keys=True)
    return summary


def sweep_grid_points(grid: dict, max_configs: int | None = None, seed: int = 0) -> list[dict]:
    """Cartesian product of ``grid``, optionally a seeded subset of ``max_configs`` points."""
    keys = sorted(grid)
    points = [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]
    if max_configs is not None and len(points) > max_configs:
        idx = np.sort(np.random.default_rng(seed).choice(len(points), max_configs, replace=False))
        points = [points[i] for i in idx]
    return points


def select_configuration(scores: dict[str, list[float]], expected_seeds: int) -> tuple[str, list[str]]:
    """Configuration hash with the lowest mean final score.

    Entries with fewer than ``expected_seeds`` scores are excluded. Ties go to
    the lexicographically smallest hash. Returns (winner, warnings).
    """
    warnings = []
    complete = {}
    for h, vals in scores.items():
        if len(vals) < expected_seeds:
            warnings.append(f"configuration {h} has {len(vals)}/{expected_seeds} seed runs; excluded")
        else:
            complete[h] = float(np.mean(vals))
    if not complete:
        raise CampaignError("no sweep configuration completed all seeds")
    best = min(complete.values())
    tied = sorted(h for h, v in complete.items() if v == best)
    if len(tied) > 1:
        warnings.append(f"tie between {tied}; picked {tied[0]}")
    return tied[0], warnings


def cmd_sweep(cfg: CampaignConfig) -> dict:
    """Train every grid point on the sweep seeds and persist the best configuration per algorithm."""
    sw = cfg.sweep
    sweep_seeds = sw.get("seeds", SWEEP_SEEDS)
    sched = {**cfg.schedule, **sw.get("schedule", {})}
    out = Path(cfg.out_dir) / "sweep"
    selected, provenance = {}, {}
    for spec in cfg.algorithm_specs():
        if spec.kind not in LEARNERS:
            continue
        grid = sw.get("grids", {}).get(spec.name) or (PPO_SWEEP_GRID if spec.kind == "ppo" else SAC_SWEEP_GRID)
        points = sweep_grid_points(grid, sw.get("max_configs"), cfg.stats_seed)
        candidates = {}
        cells = []
        for point in points:
            params = {**spec.params, **_expand_lr(spec.kind, point)}
            cand = dataclasses.replace(spec, params=params)
            candidates[cand.config_hash()] = (point, cand)
            for seed in sweep_seeds:
                cells.append((cand, cfg.to_dict(), seed, str(out / spec.name / run_dir_name(cand, seed)), sched, False))
        results = _run_cells(cells, cfg.workers)
        scores: dict[str, list[float]] = {h: [] for h in candidates}
        for cell, res in zip(cells, results):
            if res["status"] == "ok":
                scores[cell[0].config_hash()].append(res["final_score"])
        winner, warnings = select_configuration(scores, len(sweep_seeds))
        for w in warnings:
            log.warning("%s: %s", spec.name, w)
        selected[spec.name] = {"config_hash": winner, "params": candidates[winner][0]}
        provenance[spec.name] = {
            "candidates": {h: {"point": candidates[h][0], "scores": scores[h]} for h in sorted(candidates)},
            "warnings": warnings,
            "seeds": sweep_seeds,
            "schedule": sched,
        }
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "selection.json", "w") as fh:
        json.dump({"selected": selected, "provenance": provenance}, fh, indent=2, sort_keys=True)
    return selected


def cmd_evaluate(
    cfg: CampaignConfig,
    checkpoint: str | Path,
    agents: int | None = None,
    mask_leads=None,
    importance: bool = False,
    horizon: int | None = None,
    episodes: int | None = None,
    out: str | Path | None = None,
) -> dict:
    """Evaluate a checkpoint, possibly on a different district size or a masked observation schema."""
    mask_leads = list(mask_leads if mask_leads is not None else cfg.mask_leads)
    schema = mask_forecast_features(None, mask_leads) if mask_leads else ObservationSchema()
    policy = NeuralPolicy.load(checkpoint, schema.digest())
    trained_agents = policy.meta.get("extra", {}).get("n_agents")
    bundle = cfg.bundle(agents if agents is not None else cfg.eval_agents)
    if not policy.shared and trained_agents is not None and bundle.n_buildings != trained_agents:
        raise CampaignError(
            f"policy has per-agent parameters for {trained_agents} agents; cannot act for {bundle.n_buildings}"
        )
    sim_cfg = dataclasses.replace(cfg.sim_config(), obs_noise_std=0.0)
    model = make_model(bundle, schema, sim_cfg)
    n_eps = episodes or cfg.schedule.get("eval_episodes", 8)
    metrics = evaluate(model, policy, n_eps, EVAL_SEED_OFFSET, BaselineCache(model))
    report = {
        "checkpoint": str(checkpoint),
        "n_agents": bundle.n_buildings,
        "n_features": len(schema),
        "mask_leads": sorted(mask_leads),
        "metrics": metrics,
    }
    if importance:
        env = DistrictEnv(model)
        env.reset(seed=ABSOLUTE_SEED_OFFSET)
        policy.reset()
        rec = agent_importance(env, policy, horizon or model.T)
        report["importance"] = {"scores": rec.scores.tolist(), "T": rec.T, "reward_mean": float(rec.rewards.mean())}
        if out is not None:
            Path(out).mkdir(parents=True, exist_ok=True)
            rec.to_csv(Path(out) / "agent_importance.csv")
            rec.reward_histogram_csv(Path(out) / "team_reward_histogram.csv")
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        with open(Path(out) / "evaluation.json", "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
    return report


# reports


def build_run_matrix(rows: list[dict]) -> stats.RunMatrix:
    """Rectangular (algorithm, seed, eval point) matrix from run records."""
    if not rows:
        raise CampaignError("no run records found")
    hashes = {r["schema_hash"] for r in rows}
    if len(hashes) > 1:
        raise CampaignError(f"records mix environment schema hashes {sorted(hashes)}; refusing to aggregate")
    evals = [r for r in rows if r["phase"] == "eval"]
    algorithms = sorted({r["algorithm"] for r in evals})
    seeds = sorted({r["seed"] for r in evals})
    steps = sorted({r["eval_step"] for r in evals})
    metrics = sorted({r["metric"] for r in evals})
    a_ix = {a: i for i, a in enumerate(algorithms)}
    s_ix = {s: i for i, s in enumerate(seeds)}
    e_ix = {e: i for i, e in enumerate(steps)}
    values = {m: np.full((len(algorithms), len(seeds), len(steps)), np.nan) for m in metrics}
    absolute = {}
    for r in evals:
        values[r["metric"]][a_ix[r["algorithm"]], s_ix[r["seed"]], e_ix[r["eval_step"]]] = r["value"]
    for r in rows:
        if r["phase"] == "absolute":
            block = absolute.setdefault(r["metric"], np.full((len(algorithms), len(seeds)), np.nan))
            block[a_ix[r["algorithm"]], s_ix[r["seed"]]] = r["value"]
    for m, v in values.items():
        if np.isnan(v).any():
            raise CampaignError(f"metric {m!r} is missing for some (algorithm, seed, eval point)")
    absolute = {m: b for m, b in absolute.items() if not np.isnan(b).any()}
    directions = {m: METRIC_DIRECTIONS.get(m, stats.LOWER) for m in metrics}
    return stats.RunMatrix(algorithms, seeds, steps, values, directions, absolute)


def best_per_run_table(matrix: stats.RunMatrix, metrics: list[str]) -> list[dict]:
    """Each run's best value of each metric across its evaluations, by the metric's direction."""
    rows = []
    for a, alg in enumerate(matrix.algorithms):
        best = {m: stats.best_per_run(matrix.values[m][a], matrix.direction(m)) for m in metrics}
        for s, seed in enumerate(matrix.seeds):
            rows.append({"algorithm": alg, "seed": seed, **{m: float(best[m][s]) for m in metrics}})
    return rows


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


REPORT_FILES = (
    "sample_efficiency.csv",
    "aggregate.csv",
    "probability_of_improvement.csv",
    "rank_distribution.csv",
    "tradeoff_minmax.csv",
    "best_per_kpi.csv",
    "absolute_metric.csv",
)


def cmd_report(records_dir: str | Path, out: str | Path, stats_seed: int = 0, n_resamples: int = 2000, metrics=None) -> dict:
    """Write one CSV per figure family from the run records under ``records_dir``."""
    matrix = build_run_matrix(read_records(records_dir))
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    metrics = list(metrics) if metrics else sorted(matrix.values)
    multi_seed = len(matrix.seeds) >= 2
    notices = []

    rows = []
    for m in metrics:
        for e, step in enumerate(matrix.eval_points):
            if multi_seed:
                ci = stats.stratified_bootstrap_ci(matrix, m, stats.iqm, n_resamples, seed=stats_seed, eval_index=e)
            for a, alg in enumerate(matrix.algorithms):
                point = stats.iqm(matrix.values[m][a, :, e])
                lo, hi = (ci[alg].ci_low, ci[alg].ci_high) if multi_seed else (point, point)
                rows.append([m, alg, step, point, lo, hi])
    _write_csv(out / "sample_efficiency.csv", ["metric", "algorithm", "eval_step", "iqm", "ci_low", "ci_high"], rows)

    rows = []
    for m in metrics:
        direction = matrix.direction(m)
        for name, fn in (("iqm", stats.iqm), ("cvar", lambda x, d=direction: stats.cvar(x, 0.25, d))):
            ci = stats.stratified_bootstrap_ci(matrix, m, fn, n_resamples, seed=stats_seed) if multi_seed else None
            for a, alg in enumerate(matrix.algorithms):
                point = fn(matrix.samples(m)[a])
                lo, hi = (ci[alg].ci_low, ci[alg].ci_high) if ci else (point, point)
                rows.append([m, alg, name, point, lo, hi])
    _write_csv(out / "aggregate.csv", ["metric", "algorithm", "estimator", "point", "ci_low", "ci_high"], rows)

    rows = []
    if len(matrix.algorithms) < 2:
        notices.append("probability_of_improvement: fewer than two algorithms, no pairs to compare")
    else:
        for m in metrics:
            for (i, x), (j, y) in itertools.permutations(enumerate(matrix.algorithms), 2):
                s = stats.probability_of_improvement_ci(
                    matrix.samples(m)[i], matrix.samples(m)[j], matrix.direction(m), n_resamples, seed=stats_seed
                )
                rows.append([m, x, y, s.point, s.ci_low, s.ci_high])
    _write_csv(out / "probability_of_improvement.csv", ["metric", "algorithm_x", "algorithm_y", "probability", "ci_low", "ci_high"], rows)

    n_alg = len(matrix.algorithms)
    rows = []
    if n_alg < 2:
        notices.append("rank_distribution: fewer than two algorithms")
    else:
        for m in metrics:
            dist = stats.rank_distribution(matrix, m, stats.iqm, n_resamples, seed=stats_seed)
            rows.extend([m, alg, *dist[alg].tolist()] for alg in matrix.algorithms)
    _write_csv(out / "rank_distribution.csv", ["metric", "algorithm", *[f"rank_{k + 1}" for k in range(n_alg)]], rows)

    kpis = [f"norm_{k}" for k in KPI_KEYS if f"norm_{k}" in matrix.values]
    raw = np.array([[stats.iqm(matrix.samples(k)[a]) for k in kpis] for a in range(n_alg)]) if kpis else np.zeros((n_alg, 0))
    scaled, constant = minmax_normalize_matrix(raw) if kpis else (raw, np.zeros(0, bool))
    rows = [[alg, *scaled[a].tolist()] for a, alg in enumerate(matrix.algorithms)]
    rows.append(["constant_column", *[int(c) for c in constant]])
    _write_csv(out / "tradeoff_minmax.csv", ["algorithm", *kpis], rows)

    table = best_per_run_table(matrix, metrics)
    _write_csv(out / "best_per_kpi.csv", ["algorithm", "seed", *metrics], [[r["algorithm"], r["seed"], *[r[m] for m in metrics]] for r in table])

    rows = []
    if not matrix.absolute:
        notices.append("absolute_metric: no absolute-evaluation records")
    for m in sorted(matrix.absolute):
        for alg, v in stats.absolute_metric(matrix, m).items():
            rows.append([m, alg, v])
    _write_csv(out / "absolute_metric.csv", ["metric", "algorithm", "value"], rows)

    summary = {"files": list(REPORT_FILES), "notices": notices, "algorithms": matrix.algorithms, "seeds": matrix.seeds}
    with open(out / "report_manifest.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    for n in notices:
        log.info(n)
    return summary
