"""Outer iterations to tolerance across penalty growth factors on a few basic-map instances.

    python3 scripts/zeta_sweep.py --out runs/zeta
"""

import argparse
import csv
import json
from dataclasses import replace
from pathlib import Path

from smd.cli import ZETAS, sweep_zeta
from smd.experiments import suite
from smd.projection import ProjectionConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/zeta")
    ap.add_argument("--cases", type=int, default=3)
    ap.add_argument("--noise", type=float, default=0.1)
    ap.add_argument("--max-outer-iters", type=int, default=400)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    insts = suite(("basic",), 1, 3, args.cases, args.seed)
    base = replace(ProjectionConfig(), max_outer_iters=args.max_outer_iters)
    rows, summary = sweep_zeta(insts, ZETAS, args.noise, args.seed, base)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "zeta_traces.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    (out / "zeta_summary.json").write_text(json.dumps(summary, indent=1))
    for s in summary:
        print(f"{s['instance_id']} zeta={s['zeta']:.2f} iterations={s['outer_iterations']} "
              f"converged={s['converged']}")


if __name__ == "__main__":
    main()
