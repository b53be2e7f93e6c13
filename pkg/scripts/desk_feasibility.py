"""Train a small model on bootstrapped data, then sample the desk suite with and without projection.

    python3 scripts/desk_feasibility.py --out runs/desk
"""

import argparse
import json
import logging
from dataclasses import replace
from pathlib import Path

from smd.evaluation import aggregate, write_report
from smd.experiments import DeskConfig, max_violations, run_cases, suite, summarize, train_model


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/desk")
    ap.add_argument("--num-maps", type=int, default=5)
    ap.add_argument("--cases", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=150)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cfg = replace(DeskConfig(), num_maps=args.num_maps, cases=args.cases, epochs=args.epochs,
                  suite_seed=args.seed)
    train_insts = suite(cfg.families, cfg.train_maps, cfg.num_robots, cfg.train_cases, cfg.train_seed)
    model, losses, n = train_model(train_insts, cfg)
    logging.info("trained on %d trajectories, final loss %.4f", n, losses[-1])

    ev = suite(cfg.families, cfg.num_maps, cfg.num_robots, cfg.cases, cfg.suite_seed)
    out = Path(args.out)
    results = {}
    for name, sampler in (("projected", cfg.sampler),
                          ("unprojected", replace(cfg.sampler, projection_enabled=False))):
        cases = run_cases(ev, model, sampler, mode="discrete")
        write_report(aggregate([c.record for c in cases]), out / name)
        results[name] = summarize(cases)
        if name == "projected":
            results[name]["max_violations"] = max_violations(cases)
    (out / "summary.json").write_text(json.dumps(results, indent=1))
    for name, s in results.items():
        print(f"{name}: S={s['S']:.3f} C={s['C']:.4f} collision events={s['collision_events']} "
              f"time={s['seconds']:.0f}s")


if __name__ == "__main__":
    main()
