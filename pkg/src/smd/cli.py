"""``smd`` command-line interface.

Every subcommand writes its outputs under ``--out`` together with a
``run.json`` recording the resolved arguments and seed. A JSON ``--config``
file supplies defaults for any flag (keys are the flag names with dashes
replaced by underscores); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .benchmark import BenchmarkSpec, generate_suite, merge_manifests, write_suite
from .core import (MAP_FAMILIES, ProblemInstance, load_instance, load_trajectory,
                   save_trajectory)
from .evaluation import MissingRecordsError, aggregate, evaluate_case, write_report
from .projection import ProjectionConfig, project_alm, write_trace_csv

log = logging.getLogger("smd")

ZETAS = (1.00, 1.01, 1.03, 1.05, 1.07, 1.09)


# ----------------------------------------------------------------------------
# helpers

def instance_seed(seed: int, instance_id: str) -> int:
    """Per-instance seed that does not depend on which other instances are in the run."""
    return int(np.random.SeedSequence([seed, zlib.crc32(instance_id.encode())]).generate_state(1)[0])


def load_instances(path: str | Path) -> tuple[list[ProblemInstance], dict | None]:
    """All instance files of a directory (sorted by id) or a single file, plus any manifest."""
    p = Path(path)
    if p.is_file():
        return [load_instance(p)], None
    if not p.is_dir():
        raise FileNotFoundError(f"no instances at {p}")
    files = sorted(f for f in p.glob("*.json") if f.name not in ("manifest.json", "run.json"))
    insts = sorted((load_instance(f) for f in files), key=lambda i: i.instance_id)
    mpath = p / "manifest.json"
    manifest = json.loads(mpath.read_text()) if mpath.exists() else None
    return insts, manifest


def _filter(insts, families=None, robots=None, limit=None):
    out = [i for i in insts if (not families or i.map_family in families)
           and (not robots or i.num_robots in robots)]
    return out[:limit] if limit else out


def _projection_config(args) -> ProjectionConfig:
    base = getattr(args, "projection", None) or {}
    cfg = ProjectionConfig.for_sampling() if getattr(args, "fast_projection", True) else ProjectionConfig()
    cfg = replace(cfg, **{k: v for k, v in base.items() if k != "inner"})
    if "inner" in base:
        cfg = replace(cfg, inner=replace(cfg.inner, **base["inner"]))
    for name in ("zeta", "rho_init", "max_outer_iters", "substeps"):
        v = getattr(args, name, None)
        if v is not None:
            cfg = replace(cfg, **{name: v})
    return cfg


def _pool_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def write_run_record(out: Path, args, extra: dict | None = None) -> None:
    resolved = {k: _jsonable(v) for k, v in vars(args).items() if k != "func"}
    rec = {"command": args.command, "argv": sys.argv[1:], "seed": args.seed,
           "resolved": resolved, "version": __version__, "python": platform.python_version(),
           "numpy": np.__version__, "started": datetime.now(timezone.utc).isoformat()}
    if extra:
        rec.update(extra)
    out.mkdir(parents=True, exist_ok=True)
    (out / "run.json").write_text(json.dumps(rec, indent=1))


# ----------------------------------------------------------------------------
# subcommands

def cmd_generate(args) -> int:
    families = args.families or list(MAP_FAMILIES)
    instances, manifests = [], []
    for fam in families:
        kw = {"family": fam, "seed": args.seed}
        if args.num_maps is not None:
            kw["num_maps"] = args.num_maps
        if args.robots and fam != "corridor":
            kw["robots_counts"] = args.robots
        if args.cases is not None:
            kw["cases_per_config"] = args.cases
        insts, man = generate_suite(BenchmarkSpec(**kw))
        instances += insts
        manifests.append(man)
    manifest = merge_manifests(manifests)
    write_suite(instances, manifest, Path(args.out) / "instances")
    write_run_record(Path(args.out), args, {"total": manifest["total"]})
    log.info("wrote %d instances", manifest["total"])
    print(json.dumps({f: m["count"] for f, m in manifest["families"].items()} | {"total": manifest["total"]}))
    return 0


def cmd_bootstrap_data(args) -> int:
    from .diffusion import BootstrapConfig, bootstrap_dataset

    insts, _ = load_instances(args.instances)
    insts = _filter(insts, args.families, [args.num_robots] if args.num_robots else None, args.limit)
    if not insts:
        raise SystemExit("no instances selected")
    cfg = BootstrapConfig(amplitude=args.amplitude, projection=_projection_config(args))
    pairs = bootstrap_dataset(insts, args.per_instance, seed=args.seed, config=cfg)
    shapes = {p[1].positions.shape for p in pairs}
    if len(shapes) > 1:
        raise SystemExit(f"selected instances mix trajectory shapes {sorted(shapes)}; use --num-robots")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    np.savez(out / "dataset.npz", positions=np.stack([t.positions for _, t in pairs]),
             instance_ids=np.array([i.instance_id for i, _ in pairs]))
    write_run_record(out, args, {"num_trajectories": len(pairs), "num_instances": len(insts)})
    print(f"{len(pairs)} trajectories from {len(insts)} instances")
    return 0


def cmd_train(args) -> int:
    from .diffusion import NoiseSchedule, ScoreModel, TrainConfig, train

    data = np.load(args.data)["positions"]
    _, N, H, _ = data.shape
    schedule = NoiseSchedule(num_steps=args.num_steps)
    model = ScoreModel(N, H, schedule, hidden=tuple(args.hidden), time_dim=args.time_dim,
                       map_family=args.map_family or "", seed=args.seed)
    cfg = TrainConfig(lr=args.lr, batch_size=args.batch_size, epochs=args.epochs, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _, losses = train(model, data, cfg,
                      callback=lambda e, l: log.info("epoch %d loss %.5f", e, l))
    model.save(out / "model.npz")
    with open(out / "losses.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["epoch", "loss"])
        w.writerows([e, repr(l)] for e, l in enumerate(losses))
    write_run_record(out, args, {"final_loss": losses[-1] if losses else None,
                                 "num_params": model.num_params()})
    print(f"final loss {losses[-1]:.5f}" if losses else "no epochs")
    return 0


def _sample_one(job):
    from .diffusion import SamplerConfig, ScoreModel, ZeroScore, sample

    inst, model_path, sampler_kw, pcfg, out = job
    if model_path == "zero":
        model = ZeroScore(inst.num_robots, inst.horizon)
    else:
        model = ScoreModel.load(model_path)
    cfg = SamplerConfig(projection=pcfg, **sampler_kw)
    traj, diag = sample(inst, model, config=cfg)
    save_trajectory(traj, Path(out) / "trajectories" / f"{inst.instance_id}.json", inst.instance_id)
    diag.write_csv(Path(out) / "diagnostics" / f"{inst.instance_id}.csv")
    return {"instance_id": inst.instance_id, "seed": cfg.seed,
            "projection_converged": diag.final_converged, "feasible": diag.feasible}


def cmd_sample(args) -> int:
    insts, _ = load_instances(args.instances)
    insts = _filter(insts, args.families, args.robots, args.limit)
    out = Path(args.out)
    (out / "trajectories").mkdir(parents=True, exist_ok=True)
    (out / "diagnostics").mkdir(parents=True, exist_ok=True)
    pcfg = _projection_config(args)
    jobs = []
    for inst in insts:
        kw = {"inner_iters": args.inner_iters, "gamma0": args.gamma0,
              "projection_enabled": not args.no_projection,
              "seed": instance_seed(args.seed, inst.instance_id)}
        jobs.append((inst, args.model, kw, pcfg, str(out)))
    results = _pool_map(_sample_one, jobs, args.threads)
    (out / "samples.json").write_text(json.dumps(results, indent=1))
    write_run_record(out, args, {"projection": pcfg.to_dict(), "num_samples": len(results)})
    ok = sum(r["projection_converged"] for r in results)
    print(f"{len(results)} samples, {ok} with converged projection")
    return 0


def cmd_project(args) -> int:
    inst = load_instance(args.instance)
    traj, _ = load_trajectory(args.trajectory)
    pcfg = replace(_projection_config(args), seed=args.seed)
    res = project_alm(traj, inst, pcfg, trace=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_trajectory(res.trajectory, out / "projected.json", inst.instance_id)
    if args.trace:
        write_trace_csv(res.trace, args.trace)
    write_trace_csv(res.trace, out / "trace.csv")
    write_run_record(out, args, {"projection": pcfg.to_dict(), "converged": res.converged,
                                 "outer_iterations": len(res.trace),
                                 "viol_a": res.viol_a, "viol_o": res.viol_o})
    print(f"converged={res.converged} outer_iterations={len(res.trace)} "
          f"viol_a={res.viol_a:.3g} viol_o={res.viol_o:.3g}")
    return 0


def _evaluate_one(job):
    traj_path, inst, mode, substeps = job
    traj, _ = load_trajectory(traj_path)
    return evaluate_case(traj, inst, mode, substeps)


def cmd_evaluate(args) -> int:
    insts, manifest = load_instances(args.instances)
    tdir = Path(args.trajectories)
    mode = "discrete" if args.discrete else args.mode
    requested = {i.instance_id: i for i in insts}
    if manifest is not None and not args.ignore_manifest:
        wanted = [e["instance_id"] for e in manifest["instances"]]
    else:
        wanted = sorted(requested)
    missing = [iid for iid in wanted if iid not in requested or not (tdir / f"{iid}.json").exists()]
    if args.allow_partial:
        wanted = [iid for iid in wanted if iid not in missing]
        missing = []
    if missing:
        err = MissingRecordsError(missing)
        log.error("%s", err)
        print(f"error: {err}", file=sys.stderr)
        return 1
    jobs = [(tdir / f"{iid}.json", requested[iid], mode, args.substeps) for iid in wanted]
    records = _pool_map(_evaluate_one, jobs, args.threads)
    report = aggregate(records)
    out = Path(args.out)
    write_report(report, out)
    write_run_record(out, args, {"mode": mode, "num_records": len(records)})
    for r in report.aggregate:
        print(f"{r.family} N={r.num_robots} cases={r.cases} S={r.S:.3f} "
              f"L={'-' if r.L is None else f'{r.L:.4f}'} A={'-' if r.A is None else f'{r.A:.5f}'} "
              f"C={r.C:.3f}")
    return 0


def sweep_zeta(instances, zetas, noise: float, seed: int, base: ProjectionConfig):
    """Trace rows and iterations-to-tolerance per (instance, zeta).

    Each instance is projected from its straight line plus seeded Gaussian
    noise of std ``noise``; the same input is used for every zeta.
    """
    from .core import Trajectory

    rows, summary = [], []
    for inst in instances:
        rng = np.random.default_rng([seed, zlib.crc32(inst.instance_id.encode())])
        x = Trajectory.straight_line(inst).positions + noise * rng.standard_normal(
            (inst.num_robots, inst.horizon, 2))
        for z in zetas:
            res = project_alm(x, inst, replace(base, zeta=z, seed=seed), trace=True)
            for r in res.trace:
                rows.append({"instance_id": inst.instance_id, "zeta": z, "k": r.k,
                             "viol_a": r.viol_a, "viol_o": r.viol_o, "rho": r.rho})
            summary.append({"instance_id": inst.instance_id, "zeta": z, "converged": res.converged,
                            "outer_iterations": len(res.trace)})
    return rows, summary


def cmd_sweep_zeta(args) -> int:
    insts, _ = load_instances(args.instances)
    insts = _filter(insts, args.families, args.robots, args.limit)
    base = replace(ProjectionConfig(), max_outer_iters=args.max_outer_iters)
    if args.rho_init is not None:
        base = replace(base, rho_init=args.rho_init)
    rows, summary = sweep_zeta(insts, args.zetas, args.noise, args.seed, base)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "zeta_traces.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=["instance_id", "zeta", "k", "viol_a", "viol_o", "rho"])
        w.writeheader()
        w.writerows(rows)
    (out / "zeta_summary.json").write_text(json.dumps(summary, indent=1))
    write_run_record(out, args, {"projection": base.to_dict()})
    for s in summary:
        print(f"{s['instance_id']} zeta={s['zeta']:.2f} iterations={s['outer_iterations']} "
              f"converged={s['converged']}")
    return 0


# ----------------------------------------------------------------------------
# parser

def _int_list(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v]


def _float_list(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v]


def _str_list(s: str) -> list[str]:
    return [v for v in s.split(",") if v]


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", type=str, default=None, help="JSON file with flag defaults")
    common.add_argument("--out", type=str, default="runs/out")
    common.add_argument("--threads", type=int, default=1, help="worker processes over instances")
    common.add_argument("--log-level", type=str, default="WARNING")

    parser = argparse.ArgumentParser(prog="smd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        subs[name] = p
        return p

    def selection(p):
        p.add_argument("--instances", type=str, required=True, help="instance directory or file")
        p.add_argument("--families", type=_str_list, default=None)
        p.add_argument("--robots", type=_int_list, default=None)
        p.add_argument("--limit", type=int, default=None)

    def projection_flags(p, substeps_default):
        p.add_argument("--rho-init", type=float, default=None)
        p.add_argument("--zeta", type=float, default=None)
        p.add_argument("--max-outer-iters", type=int, default=None)
        p.add_argument("--substeps", type=int, default=substeps_default,
                       help="interpolated separation samples per segment inside the projection")

    p = add("generate", cmd_generate, "generate benchmark instances")
    p.add_argument("--families", type=_str_list, default=None)
    p.add_argument("--num-maps", type=int, default=None)
    p.add_argument("--robots", type=_int_list, default=None)
    p.add_argument("--cases", type=int, default=None)

    p = add("bootstrap-data", cmd_bootstrap_data, "projected perturbations of straight lines")
    p.add_argument("--instances", type=str, required=True)
    p.add_argument("--families", type=_str_list, default=None)
    p.add_argument("--num-robots", type=int, default=None)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--per-instance", type=int, default=10)
    p.add_argument("--amplitude", type=float, default=0.15)
    projection_flags(p, 1)

    p = add("train", cmd_train, "fit the score network")
    p.add_argument("--data", type=str, required=True, help="dataset.npz from bootstrap-data")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--hidden", type=_int_list, default=[256, 256, 256, 256])
    p.add_argument("--time-dim", type=int, default=32)
    p.add_argument("--num-steps", type=int, default=25)
    p.add_argument("--map-family", type=str, default=None)

    p = add("sample", cmd_sample, "projected Langevin sampling")
    selection(p)
    p.add_argument("--model", type=str, required=True, help="model.npz, or 'zero' for a zero score")
    p.add_argument("--inner-iters", type=int, default=5)
    p.add_argument("--gamma0", type=float, default=0.05)
    p.add_argument("--no-projection", action="store_true")
    projection_flags(p, 4)

    p = add("project", cmd_project, "project one trajectory file")
    p.add_argument("--instance", type=str, required=True)
    p.add_argument("--trajectory", type=str, required=True)
    p.add_argument("--trace", type=str, default=None, help="also write the trace CSV here")
    p.add_argument("--exact", dest="fast_projection", action="store_false",
                   help="library defaults (rho_init=1, tight inner tolerance)")
    projection_flags(p, 4)

    p = add("evaluate", cmd_evaluate, "score trajectories")
    p.add_argument("--instances", type=str, required=True)
    p.add_argument("--trajectories", type=str, required=True)
    p.add_argument("--mode", choices=["discrete", "interpolated"], default="interpolated")
    p.add_argument("--substeps", type=int, default=4)
    p.add_argument("--discrete", action="store_true", help="same as --mode discrete")
    p.add_argument("--ignore-manifest", action="store_true",
                   help="evaluate the instance files present instead of the manifest list")
    p.add_argument("--allow-partial", action="store_true", help="skip instances without a trajectory")

    p = add("sweep-zeta", cmd_sweep_zeta, "ALM residual traces across penalty growth factors")
    selection(p)
    p.add_argument("--zetas", type=_float_list, default=list(ZETAS))
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--rho-init", type=float, default=None)
    p.add_argument("--max-outer-iters", type=int, default=400)
    return parser, subs


def parse_args(argv=None) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
        known = {a.dest for a in subs[args.command]._actions}
        unknown = set(cfg) - known - {"projection"}
        if unknown:
            parser.error(f"unknown keys in {args.config}: {sorted(unknown)}")
        subs[args.command].set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    return int(args.func(args) or 0)


if __name__ == "__main__":
    sys.exit(main())
