"""Command-line entry point: ``districtbench <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .campaign import CampaignConfig, CampaignError, cmd_benchmark, cmd_evaluate, cmd_report, cmd_sweep
from .controllers.policy import CheckpointError
from .data import generate_synthetic_dataset, write_dataset


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _load_config(args) -> CampaignConfig:
    cfg = CampaignConfig.from_json(args.config) if args.config else CampaignConfig()
    if args.scale and args.scale != cfg.scale:
        cfg = cfg.with_scale(args.scale)
    if args.out:
        cfg.out_dir = args.out
    if args.seeds:
        cfg.seeds = _int_list(args.seeds)
        if len(set(cfg.seeds)) != len(cfg.seeds):
            raise CampaignError(f"seeds must be distinct, got {cfg.seeds}")
    if args.stats_seed is not None:
        cfg.stats_seed = args.stats_seed
    if args.agents is not None:
        cfg.eval_agents = args.agents
    if args.mask_forecasts:
        cfg.mask_leads = _int_list(args.mask_forecasts)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="campaign config (JSON)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seeds", help="comma-separated seed list")
    scale = common.add_mutually_exclusive_group()
    scale.add_argument("--desk-scale", dest="scale", action="store_const", const="desk")
    scale.add_argument("--paper-scale", dest="scale", action="store_const", const="paper")
    common.add_argument("--agents", type=int, help="district size used for evaluation")
    common.add_argument("--mask-forecasts", help="forecast leads to drop, e.g. 6,12,24")
    common.add_argument("--stats-seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="districtbench", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep", parents=[common], help="hyperparameter sweep")
    sub.add_parser("benchmark", parents=[common], help="train and evaluate every algorithm x seed")
    for name, text in (("evaluate", "evaluate a checkpoint"), ("importance", "per-agent importance of a checkpoint")):
        e = sub.add_parser(name, parents=[common], help=text)
        e.add_argument("--checkpoint", required=True)
        e.add_argument("--episodes", type=int)
        e.add_argument("--horizon", type=int)
    r = sub.add_parser("report", parents=[common], help="plot-data files from run records")
    r.add_argument("--records", help="directory holding run records (defaults to the output directory)")
    s = sub.add_parser("synth-data", parents=[common], help="write a synthetic dataset")
    s.add_argument("--buildings", type=int, default=2)
    s.add_argument("--hours", type=int, default=168)
    s.add_argument("--data-seed", type=int, default=0)
    s.add_argument("--forecast-noise", type=float, default=0.0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _load_config(args)
        if args.command == "synth-data":
            bundle = generate_synthetic_dataset(args.data_seed, args.buildings, args.hours, args.forecast_noise)
            path = write_dataset(bundle, args.out or "synthetic_data")
            print(f"wrote {bundle.n_buildings} buildings x {bundle.T} h to {path}")
            return 0
        if args.command == "sweep":
            selected = cmd_sweep(cfg)
            print(json.dumps(selected, indent=2, sort_keys=True))
            return 0
        if args.command == "benchmark":
            summary = cmd_benchmark(cfg)
            ok = len(summary["cells"]) - summary["failed"]
            print(f"{ok}/{len(summary['cells'])} runs succeeded; records under {Path(cfg.out_dir) / 'runs'}")
            return 0 if summary["failed"] == 0 else 1
        if args.command in ("evaluate", "importance"):
            report = cmd_evaluate(
                cfg,
                args.checkpoint,
                importance=args.command == "importance",
                horizon=args.horizon,
                episodes=args.episodes,
                out=args.out,
            )
            print(json.dumps(report, indent=2, sort_keys=True))
            return 0
        if args.command == "report":
            records = args.records or cfg.out_dir
            summary = cmd_report(records, Path(args.out or cfg.out_dir) / "report", cfg.stats_seed, cfg.n_resamples)
            for n in summary["notices"]:
                print(f"notice: {n}")
            print(f"wrote {len(summary['files'])} report files")
            return 0
    except (CampaignError, CheckpointError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
