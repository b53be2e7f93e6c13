"""Training corpus built from perturbed straight lines pushed through the projection."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, replace

import numpy as np

from ..constraints import is_feasible
from ..core import ProblemInstance, Trajectory
from ..projection import ProjectionConfig, project_alm

log = logging.getLogger(__name__)


@dataclass
class BootstrapConfig:
    amplitude: float = 0.15     # std of each sinusoid coefficient, world units
    num_modes: int = 3
    max_attempts: int = 3       # per requested trajectory
    feasibility_tol: float = 1e-6
    projection: ProjectionConfig | None = None


def smooth_perturbation(num_robots: int, horizon: int, rng: np.random.Generator,
                        amplitude: float, num_modes: int) -> np.ndarray:
    """Sum of low-frequency sines that vanish at both endpoints, shape (N, H, 2)."""
    s = np.linspace(0.0, 1.0, horizon)
    modes = np.sin(np.pi * np.arange(1, num_modes + 1)[:, None] * s[None])  # (K, H)
    coef = rng.standard_normal((num_robots, num_modes, 2)) * amplitude
    coef /= np.arange(1, num_modes + 1)[None, :, None]
    return np.einsum("nkd,kh->nhd", coef, modes)


def bootstrap_dataset(instances: list[ProblemInstance], per_instance: int, seed: int = 0,
                      config: BootstrapConfig | None = None) -> list[tuple[ProblemInstance, Trajectory]]:
    """Feasible trajectories for each instance, verified by the constraint checker.

    The first draw for an instance is the unperturbed straight line, so an
    obstacle-free single-robot instance yields the straight line itself.
    """
    cfg = config or BootstrapConfig()
    pcfg = cfg.projection or ProjectionConfig.for_sampling()
    out = []
    failures = {}
    for n, inst in enumerate(instances):
        rng = np.random.default_rng([seed, n])
        base = Trajectory.straight_line(inst).positions
        kept = 0
        attempts = 0
        while kept < per_instance and attempts < per_instance * cfg.max_attempts:
            if attempts == 0:
                x = base
            else:
                x = base + smooth_perturbation(inst.num_robots, inst.horizon, rng,
                                               cfg.amplitude, cfg.num_modes)
            attempts += 1
            res = project_alm(x, inst, replace(pcfg, seed=int(rng.integers(2**31))))
            if res.converged and is_feasible(res.trajectory, inst, cfg.feasibility_tol)[0]:
                out.append((inst, res.trajectory))
                kept += 1
        if kept < per_instance:
            failures[inst.instance_id or str(n)] = (kept, attempts)
    requested = per_instance * len(instances)
    if len(out) < 0.5 * requested:
        detail = ", ".join(f"{k}: kept {a} of {b} attempts" for k, (a, b) in failures.items())
        warnings.warn(f"bootstrap yield {len(out)}/{requested} below 50% ({detail})", RuntimeWarning)
    elif failures:
        log.info("bootstrap shortfall on %d instances", len(failures))
    return out
