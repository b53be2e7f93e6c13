"""Desk-scale experiment pipeline shared by the scripts and the acceptance tests.

A small model is trained on bootstrapped trajectories from instances generated
with a different suite seed than the evaluation instances, then used to sample
every evaluation instance with and without the projection.
"""

from __future__ import annotations

import logging
import time
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from .benchmark import BenchmarkSpec, generate_suite
from .constraints import convex_violation
from .core import ProblemInstance, Trajectory
from .diffusion import (BootstrapConfig, NoiseSchedule, SamplerConfig, ScoreModel, TrainConfig,
                        bootstrap_dataset, sample, train)
from .evaluation import CaseRecord, aggregate, evaluate_case
from .projection import ProjectionConfig

log = logging.getLogger(__name__)


@dataclass
class DeskConfig:
    families: tuple[str, ...] = ("empty", "basic")
    num_maps: int = 5
    num_robots: int = 3
    cases: int = 5
    suite_seed: int = 0
    train_seed: int = 1            # suite seed of the training instances
    train_maps: int = 4
    train_cases: int = 3
    per_instance: int = 8
    hidden: tuple[int, ...] = (256, 256, 256, 256)
    epochs: int = 150
    lr: float = 1e-3
    batch_size: int = 32
    sampler: SamplerConfig = field(default_factory=SamplerConfig)


@dataclass
class SampledCase:
    instance: ProblemInstance
    trajectory: Trajectory
    converged: bool
    record: CaseRecord
    seconds: float


def suite(families, num_maps: int, num_robots: int, cases: int, seed: int) -> list[ProblemInstance]:
    out = []
    for fam in families:
        robots = [2] if fam == "corridor" else [num_robots]
        insts, _ = generate_suite(BenchmarkSpec(fam, num_maps=num_maps, robots_counts=robots,
                                                cases_per_config=cases, seed=seed))
        out += insts
    return out


def train_model(instances: list[ProblemInstance], cfg: DeskConfig,
                map_family: str = "") -> tuple[ScoreModel, list[float], int]:
    """Bootstrap a corpus from ``instances`` and fit a score model to it."""
    pairs = bootstrap_dataset(instances, cfg.per_instance, seed=cfg.train_seed,
                              config=BootstrapConfig())
    data = np.stack([t.positions for _, t in pairs])
    inst = instances[0]
    model = ScoreModel(inst.num_robots, inst.horizon, NoiseSchedule(), hidden=cfg.hidden,
                       map_family=map_family, seed=cfg.train_seed)
    model, losses = train(model, data, TrainConfig(lr=cfg.lr, batch_size=cfg.batch_size,
                                                   epochs=cfg.epochs, seed=cfg.train_seed))
    return model, losses, len(pairs)


def case_seed(base: int, instance_id: str) -> int:
    return int(np.random.SeedSequence([base, zlib.crc32(instance_id.encode())]).generate_state(1)[0])


def run_cases(instances: list[ProblemInstance], model, sampler: SamplerConfig,
              mode: str = "discrete", substeps: int = 1) -> list[SampledCase]:
    out = []
    for inst in instances:
        cfg = replace(sampler, seed=case_seed(sampler.seed, inst.instance_id))
        t0 = time.perf_counter()
        traj, diag = sample(inst, model, config=cfg)
        dt = time.perf_counter() - t0
        rec = evaluate_case(traj, inst, mode, substeps)
        out.append(SampledCase(inst, traj, diag.final_converged, rec, dt))
        log.info("%s converged=%s success=%s %.1fs", inst.instance_id, diag.final_converged,
                 rec.success, dt)
    return out


def summarize(cases: list[SampledCase]) -> dict:
    rep = aggregate([c.record for c in cases])
    n = len(cases)
    return {
        "runs": n,
        "S": sum(c.record.success for c in cases) / n,
        "C": float(np.mean([c.record.collision_ratio for c in cases])),
        "collision_events": int(sum(c.record.num_collisions for c in cases)),
        "converged": int(sum(c.converged for c in cases)),
        "seconds": float(sum(c.seconds for c in cases)),
        "rows": [vars(r) for r in rep.aggregate],
    }


def max_violations(cases: list[SampledCase]) -> tuple[float, float]:
    """Largest separation violation and convex violation over converged cases."""
    from .constraints import nonconvex_residuals

    worst_n = worst_c = 0.0
    for c in cases:
        if not c.converged:
            continue
        worst_n = max(worst_n, max(0.0, -nonconvex_residuals(c.trajectory, c.instance).min()))
        worst_c = max(worst_c, convex_violation(c.trajectory, c.instance).max())
    return worst_n, worst_c


def sampling_projection() -> ProjectionConfig:
    return ProjectionConfig.for_sampling()
