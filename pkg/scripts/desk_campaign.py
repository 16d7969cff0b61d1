"""Run a full campaign (benchmark then report) from a config file.

Usage:
    python scripts/desk_campaign.py configs/desk.json
    python scripts/desk_campaign.py configs/desk.json --workers 4
"""
import argparse
import logging

from districtbench.campaign import CampaignConfig, cmd_benchmark, cmd_report


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--out")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = CampaignConfig.from_json(args.config)
    if args.workers:
        cfg.workers = args.workers
    if args.out:
        cfg.out_dir = args.out
    summary = cmd_benchmark(cfg)
    ok = len(summary["cells"]) - summary["failed"]
    print(f"{ok}/{len(summary['cells'])} runs succeeded")
    report = cmd_report(cfg.out_dir, f"{cfg.out_dir}/report", cfg.stats_seed, cfg.n_resamples)
    for notice in report["notices"]:
        print("note:", notice)
    print("report files:", ", ".join(report["files"]))


if __name__ == "__main__":
    main()
