"""Annealed Langevin sampling with a projection after every update."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from ..constraints import is_feasible
from ..core import ProblemInstance, Trajectory
from ..projection import ProjectionConfig, project_alm
from .schedule import NoiseSchedule


@dataclass
class SamplerConfig:
    inner_iters: int = 5               # Langevin iterations per noise level
    gamma0: float = 0.05               # gamma_t = gamma0 * (1 - abar_t) unless step_sizes given
    step_sizes: list[float] | None = None  # explicit gamma_t for t = 1..T
    seed: int = 0
    projection: ProjectionConfig = field(default_factory=ProjectionConfig.for_sampling)
    projection_enabled: bool = True
    # projections before the last noise level only need to be roughly feasible
    intermediate_delta: float = 1e-3
    intermediate_max_outer: int = 50
    # without projection, overwrite the endpoints with start/goal after every step
    condition_endpoints: bool = True
    # start each projection from the previous (converged) projection's multipliers
    warm_start_duals: bool = True

    def __post_init__(self):
        if isinstance(self.projection, dict):
            self.projection = ProjectionConfig.from_dict(self.projection)
        if self.inner_iters < 1:
            raise ValueError("inner_iters must be >= 1")
        if self.gamma0 <= 0:
            raise ValueError("gamma0 must be > 0")
        if self.step_sizes is not None and any(g <= 0 for g in self.step_sizes):
            raise ValueError("step sizes must be > 0")

    def gamma(self, t: int, schedule: NoiseSchedule) -> float:
        if self.step_sizes is not None:
            return float(self.step_sizes[t - 1])
        return float(self.gamma0 * (1.0 - schedule.alpha_bars[t]))


@dataclass
class StepRecord:
    t: int
    i: int
    viol_a: float
    viol_o: float
    converged: bool


@dataclass
class SampleDiagnostics:
    rows: list[StepRecord] = field(default_factory=list)
    final_converged: bool = False
    feasible: bool = False

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["t", "i", "viol_a", "viol_o", "projection_converged"])
            for r in self.rows:
                w.writerow([r.t, r.i, repr(r.viol_a), repr(r.viol_o), int(r.converged)])


def sgld_step(x, t: int, model, gamma: float, noise) -> np.ndarray:
    """Langevin update ``x + gamma * s(x, t) + sqrt(2 gamma) z`` (before projection)."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    return x + gamma * model.score(x, t) + np.sqrt(2.0 * gamma) * np.asarray(noise)


def sample(instance: ProblemInstance, model, schedule: NoiseSchedule | None = None,
           config: SamplerConfig | None = None) -> tuple[Trajectory, SampleDiagnostics]:
    """Draw one trajectory set for ``instance``.

    Starts from standard normal noise in the model's normalised space and runs
    ``inner_iters`` Langevin steps per noise level t = T..1; with projection
    enabled every step is followed by the ALM projection onto the feasible set.
    A non-converged final projection is reported through the diagnostics,
    never raised.
    """
    cfg = config or SamplerConfig()
    schedule = schedule or model.schedule
    N, H = instance.num_robots, instance.horizon
    if (model.num_robots, model.horizon) != (N, H):
        raise ValueError(f"model is for (N_a={model.num_robots}, H={model.horizon}), "
                         f"instance has ({N}, {H})")
    rng = np.random.default_rng(cfg.seed)
    diag = SampleDiagnostics()
    u = rng.standard_normal((N, H, 2))
    starts, goals = instance.starts, instance.goals
    converged = False
    dual = None
    T = schedule.num_steps
    for t in range(T, 0, -1):
        gamma = cfg.gamma(t, schedule)
        if cfg.projection_enabled:
            pcfg = cfg.projection if t == 1 else replace(
                cfg.projection,
                delta_a=max(cfg.projection.delta_a, cfg.intermediate_delta),
                delta_o=max(cfg.projection.delta_o, cfg.intermediate_delta),
                max_outer_iters=min(cfg.projection.max_outer_iters, cfg.intermediate_max_outer))
        for i in range(1, cfg.inner_iters + 1):
            z = rng.standard_normal(u.shape)
            u = sgld_step(u, t, model, gamma, z)
            x = model.denormalize(u)
            if cfg.projection_enabled:
                pc = replace(pcfg, seed=cfg.seed * 100003 + t * 101 + i)
                res = project_alm(x, instance, pc, dual=dual)
                if cfg.warm_start_duals and res.converged:
                    dual = replace(res.dual, rho_a=pc.rho_a_init or pc.rho_init,
                                   rho_o=pc.rho_o_init or pc.rho_init, iteration=0)
                else:
                    # multipliers of a stalled solve are huge and would make the next one ill-conditioned
                    dual = None
                x = res.trajectory.positions
                converged = res.converged
                diag.rows.append(StepRecord(t, i, res.viol_a, res.viol_o, res.converged))
            elif cfg.condition_endpoints:
                x = x.copy()
                x[:, 0] = starts
                x[:, -1] = goals
            u = model.normalize(x)
    out = Trajectory(model.denormalize(u))
    diag.final_converged = converged if cfg.projection_enabled else False
    diag.feasible = is_feasible(out, instance, tol=1e-5)[0]
    return out, diag
