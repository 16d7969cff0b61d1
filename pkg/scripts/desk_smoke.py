"""Desk-scale learning smoke run.

Trains IPPO and ISAC for 200k steps on a seeded 2-building synthetic district
and compares the final average score against the random controller.

Usage:
    python scripts/desk_smoke.py --seed 1 --steps 200000
"""
import argparse
import json

from districtbench.campaign import CampaignConfig
from districtbench.controllers.training import Schedule, train_run
from districtbench.data import generate_synthetic_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--episodes", type=int, default=8)
    ap.add_argument("--algorithms", default="ippo,isac")
    ap.add_argument("--json", help="write the scores here")
    args = ap.parse_args()

    names = args.algorithms.split(",")
    cfg = CampaignConfig.from_dict({"algorithms": [{"name": n} for n in names + ["random"]]})
    specs = {s.name: s for s in cfg.algorithm_specs()}
    bundle = generate_synthetic_dataset(args.seed, 2, 168)
    sched = Schedule(args.steps, args.steps, args.episodes, seed=args.seed)

    def run(name):
        return train_run(specs[name], bundle, sched, sim_config=cfg.sim_config(), absolute=False)

    baseline = run("random").final()
    print(f"random      score {baseline:.4f}")
    results = {"random": baseline}
    for name in names:
        r = run(name)
        ratio = r.final() / baseline
        verdict = "ok" if ratio <= 0.9 else "not better by 10%"
        print(f"{name:<11} score {r.final():.4f}  ratio {ratio:.3f}  {r.wallclock:6.0f}s  {verdict}")
        results[name] = r.final()
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
