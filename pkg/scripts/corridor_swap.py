"""Two robots swapping ends of a corridor through its wider chamber.

    python3 scripts/corridor_swap.py --out runs/corridor
"""

import argparse
import json
import logging
from dataclasses import replace
from pathlib import Path

from smd.core import save_trajectory
from smd.experiments import DeskConfig, run_cases, suite, summarize, train_model


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/corridor")
    ap.add_argument("--num-maps", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cfg = replace(DeskConfig(), families=("corridor",), suite_seed=args.seed)
    model, _, _ = train_model(suite(cfg.families, cfg.train_maps, 2, cfg.train_cases, cfg.train_seed),
                              cfg, "corridor")
    cases = run_cases(suite(cfg.families, args.num_maps, 2, 1, cfg.suite_seed), model, cfg.sampler)
    out = Path(args.out)
    (out / "trajectories").mkdir(parents=True, exist_ok=True)
    for c in cases:
        save_trajectory(c.trajectory, out / "trajectories" / f"{c.instance.instance_id}.json",
                        c.instance.instance_id)
    s = summarize(cases)
    s["endpoint_error"] = max(c.record.endpoint_error for c in cases)
    (out / "summary.json").write_text(json.dumps(s, indent=1))
    print(f"S={s['S']:.2f} max endpoint error={s['endpoint_error']:.1e} time={s['seconds']:.0f}s")


if __name__ == "__main__":
    main()
