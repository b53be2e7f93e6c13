"""Constraint evaluation for MRMP trajectories.

The convex part (fixed endpoints, per-step speed limit, workspace box) is
reported as maximum violations. The separation constraints are reported as
squared-distance residuals ``g = |p - q|^2 - R^2`` which are feasible iff
``g >= 0``. Residual arrays are ordered lexicographically over (i, j, h).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import ProblemInstance, Trajectory

CONVEX_TOL = 1e-6
EVAL_TOL = 1e-4


@dataclass(frozen=True)
class ConvexViolation:
    endpoint_error: float
    velocity_error: float
    workspace_error: float

    def max(self) -> float:
        return max(self.endpoint_error, self.velocity_error, self.workspace_error)


@dataclass(frozen=True)
class NonconvexResiduals:
    robot_pairs: np.ndarray     # shape (P * H,), P = N_a (N_a - 1) / 2
    obstacle_pairs: np.ndarray  # shape (N_a * N_o * H,)

    def min(self) -> float:
        vals = [a.min() for a in (self.robot_pairs, self.obstacle_pairs) if a.size]
        return min(vals) if vals else np.inf


@lru_cache(maxsize=64)
def pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Robot pairs (i, j), i < j, in lexicographic order."""
    i, j = np.triu_indices(n, k=1)
    return i, j


def _positions(traj: Trajectory | np.ndarray, instance: ProblemInstance) -> np.ndarray:
    if isinstance(traj, Trajectory):
        traj.check_matches(instance)
        return traj.positions
    pos = np.asarray(traj, dtype=np.float64)
    if pos.shape != (instance.num_robots, instance.horizon, 2):
        raise ValueError(f"positions shape {pos.shape} does not match instance")
    return pos


def convex_violation(traj: Trajectory | np.ndarray, instance: ProblemInstance) -> ConvexViolation:
    pos = _positions(traj, instance)
    ep = max(np.linalg.norm(pos[:, 0] - instance.starts, axis=-1).max(),
             np.linalg.norm(pos[:, -1] - instance.goals, axis=-1).max())
    step = np.linalg.norm(np.diff(pos, axis=1), axis=-1)
    vel = np.maximum(0.0, step - instance.step_limits[:, None]).max()
    side = instance.workspace_side
    ws = max(0.0, -pos.min(), pos.max() - side)
    return ConvexViolation(float(ep), float(vel), float(ws))


def robot_pair_residuals(pos: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Residual matrix of shape (P, H) for the lexicographic robot pairs."""
    i, j = pair_indices(pos.shape[0])
    diff = pos[i] - pos[j]
    R = radii[i] + radii[j]
    return np.einsum("phk,phk->ph", diff, diff) - (R * R)[:, None]


def obstacle_residuals(pos: np.ndarray, radii: np.ndarray, centers: np.ndarray,
                       obstacle_radii: np.ndarray) -> np.ndarray:
    """Residual tensor of shape (N_a, N_o, H)."""
    diff = pos[:, None, :, :] - centers[None, :, None, :]
    R = radii[:, None] + obstacle_radii[None, :]
    return np.einsum("ijhk,ijhk->ijh", diff, diff) - (R * R)[:, :, None]


def nonconvex_residuals(traj: Trajectory | np.ndarray, instance: ProblemInstance) -> NonconvexResiduals:
    pos = _positions(traj, instance)
    ga = robot_pair_residuals(pos, instance.radii).ravel()
    go = obstacle_residuals(pos, instance.radii, instance.obstacle_centers,
                            instance.obstacle_radii).ravel()
    return NonconvexResiduals(ga, go)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    kind: str           # endpoint | velocity | workspace | robot_pair | obstacle | none
    indices: tuple      # (i, j, h) for separation constraints, () otherwise
    value: float        # violation magnitude (>= 0) of the worst constraint

    def to_dict(self, instance_id: str = "") -> dict:
        return {"instance_id": instance_id, "feasible": self.feasible,
                "worst_constraint": {"kind": self.kind, "indices": list(self.indices),
                                     "value": self.value}}


def is_feasible(traj: Trajectory | np.ndarray, instance: ProblemInstance,
                tol: float = CONVEX_TOL) -> tuple[bool, FeasibilityReport]:
    """Check every constraint; the report names the single worst violation.

    Violations are compared on their own scales: distances for the convex
    part, squared-distance residuals for separation.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    pos = _positions(traj, instance)
    cv = convex_violation(pos, instance)
    candidates = [("endpoint", (), cv.endpoint_error),
                  ("velocity", (), cv.velocity_error),
                  ("workspace", (), cv.workspace_error)]
    ga = robot_pair_residuals(pos, instance.radii)
    if ga.size:
        p, h = np.unravel_index(np.argmin(ga), ga.shape)
        i, j = pair_indices(instance.num_robots)
        candidates.append(("robot_pair", (int(i[p]), int(j[p]), int(h)), max(0.0, -ga[p, h])))
    go = obstacle_residuals(pos, instance.radii, instance.obstacle_centers, instance.obstacle_radii)
    if go.size:
        i, j, h = np.unravel_index(np.argmin(go), go.shape)
        candidates.append(("obstacle", (int(i), int(j), int(h)), max(0.0, -go[i, j, h])))
    kind, idx, val = max(candidates, key=lambda c: c[2])
    ok = all(c[2] <= tol for c in candidates)
    if val == 0.0:
        kind, idx = "none", ()
    return ok, FeasibilityReport(ok, kind, idx, float(val))


@dataclass(frozen=True)
class CollisionEvent:
    kind: str      # robot_pair | obstacle
    i: int         # robot index
    j: int         # other robot or obstacle index
    time: float    # fractional step index; integer values are the discrete steps
    residual: float


def check_collisions_interpolated(traj: Trajectory | np.ndarray, instance: ProblemInstance,
                                  substeps: int = 4, tol: float = 0.0) -> list[CollisionEvent]:
    """Evaluate separation at ``substeps`` points per segment (linear interpolation).

    With ``substeps == 1`` only the H discrete positions are checked. A sample
    counts as a collision when its residual is below ``-tol``.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    pos = _positions(traj, instance)
    H = pos.shape[1]
    # fractional times 0, 1/s, ..., H-1
    times = np.arange((H - 1) * substeps + 1) / substeps
    lo = np.minimum(np.floor(times).astype(int), H - 2)
    frac = (times - lo)[None, :, None]
    dense = pos[:, lo] * (1 - frac) + pos[:, lo + 1] * frac
    if substeps == 1:
        dense = pos  # exact, no interpolation round-off

    events = []
    ga = robot_pair_residuals(dense, instance.radii)
    pi, pj = pair_indices(instance.num_robots)
    for p, k in zip(*np.nonzero(ga < -tol)):
        events.append(CollisionEvent("robot_pair", int(pi[p]), int(pj[p]), float(times[k]), float(ga[p, k])))
    go = obstacle_residuals(dense, instance.radii, instance.obstacle_centers, instance.obstacle_radii)
    for i, j, k in zip(*np.nonzero(go < -tol)):
        events.append(CollisionEvent("obstacle", int(i), int(j), float(times[k]), float(go[i, j, k])))
    events.sort(key=lambda e: (e.time, e.kind, e.i, e.j))
    return events
