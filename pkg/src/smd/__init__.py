"""Multi-robot trajectory generation by projected diffusion sampling.

Submodules:
    core         problem instances and trajectories
    constraints  feasibility checks and separation residuals
    projection   convex (Dykstra) and augmented Lagrangian projections
    diffusion    noise schedule, score network, training and sampling
    benchmark    seeded map and task generator
    evaluation   success rate, path length, acceleration, collision ratio
    cli          ``smd`` command-line entry point
"""

from .core import (MAP_FAMILIES, Obstacle, ProblemInstance, RobotSpec, Trajectory,
                   load_instance, load_trajectory, make_instance, save_instance,
                   save_trajectory)
from .constraints import check_collisions_interpolated, is_feasible
from .projection import ProjectionConfig, project_alm, project_convex
from .evaluation import aggregate, evaluate_case

__version__ = "0.1.0"

__all__ = [
    "MAP_FAMILIES", "Obstacle", "ProblemInstance", "ProjectionConfig", "RobotSpec", "Trajectory",
    "aggregate", "check_collisions_interpolated", "evaluate_case", "is_feasible",
    "load_instance", "load_trajectory", "make_instance", "project_alm", "project_convex",
    "save_instance", "save_trajectory",
]
