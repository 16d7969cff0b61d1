"""Train a parameter-shared IPPO policy on a small district, then evaluate it
on a larger one and measure per-agent importance.

Usage:
    python scripts/transfer_and_importance.py --train-agents 3 --eval-agents 6
"""
import argparse
import json
from pathlib import Path

from districtbench.campaign import CampaignConfig, cmd_benchmark, cmd_evaluate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--train-agents", type=int, default=3)
    ap.add_argument("--eval-agents", type=int, default=6)
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--out", default="runs/transfer")
    args = ap.parse_args()

    cfg = CampaignConfig.from_dict({
        "algorithms": [{"name": "ippo"}],
        "dataset": {"synthetic": {"seed": 2, "n_buildings": max(args.train_agents, args.eval_agents), "T": 168}},
        "seeds": [1],
        "schedule": {"total_steps": args.steps, "eval_interval": args.steps, "eval_episodes": 2},
        "out_dir": args.out,
    })
    train_cfg = CampaignConfig.from_dict({**cfg.to_dict(), "dataset": {"synthetic": {**cfg.dataset["synthetic"], "n_buildings": args.train_agents}}})
    cmd_benchmark(train_cfg)
    ckpt = next((Path(args.out) / "runs").glob("ippo__*")) / "final.npz"
    rep = cmd_evaluate(cfg, ckpt, agents=args.eval_agents, importance=True, horizon=168, episodes=2, out=Path(args.out) / "eval")
    print(json.dumps({"n_agents": rep["n_agents"], "average_score": rep["metrics"]["average_score"],
                      "importance": rep["importance"]["scores"]}, indent=2))


if __name__ == "__main__":
    main()
