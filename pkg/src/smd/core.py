"""Domain types shared by every module: robots, obstacles, instances, trajectories."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

MAP_FAMILIES = ("empty", "basic", "dense", "corridor", "shelf", "room")

DEFAULT_SIDE = 2.0
DEFAULT_HORIZON = 64
DEFAULT_DT = 1.0


def _point(p) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64).reshape(2)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite point {p!r}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RobotSpec:
    radius: float
    start: np.ndarray
    goal: np.ndarray
    v_max: float  # units per step interval

    def __post_init__(self):
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "v_max", float(self.v_max))
        object.__setattr__(self, "start", _point(self.start))
        object.__setattr__(self, "goal", _point(self.goal))
        if not self.radius > 0:
            raise ValueError(f"robot radius must be > 0, got {self.radius}")
        if not self.v_max > 0:
            raise ValueError(f"v_max must be > 0, got {self.v_max}")

    def __eq__(self, other):
        if not isinstance(other, RobotSpec):
            return NotImplemented
        return (self.radius == other.radius and self.v_max == other.v_max
                and np.array_equal(self.start, other.start)
                and np.array_equal(self.goal, other.goal))

    __hash__ = None


@dataclass(frozen=True)
class Obstacle:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _point(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError(f"obstacle radius must be > 0, got {self.radius}")

    def __eq__(self, other):
        if not isinstance(other, Obstacle):
            return NotImplemented
        return self.radius == other.radius and np.array_equal(self.center, other.center)

    __hash__ = None


@dataclass(frozen=True)
class ProblemInstance:
    """One MRMP task: a square workspace [0, side]^2, disc obstacles and disc robots.

    Construction validates that no two starts, no two goals, and no
    start/goal and obstacle overlap.
    """

    robots: tuple[RobotSpec, ...]
    obstacles: tuple[Obstacle, ...] = ()
    horizon: int = DEFAULT_HORIZON
    dt: float = DEFAULT_DT
    workspace_side: float = DEFAULT_SIDE
    map_family: str = "empty"
    instance_id: str = ""
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "robots", tuple(self.robots))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "workspace_side", float(self.workspace_side))
        if not self.robots:
            raise ValueError("instance needs at least one robot")
        if self.horizon < 2:
            raise ValueError(f"horizon must be >= 2, got {self.horizon}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.workspace_side > 0:
            raise ValueError("workspace_side must be > 0")
        if self.map_family not in MAP_FAMILIES:
            raise ValueError(f"unknown map family {self.map_family!r}")
        if self.validate:
            self._check_placement()

    def _check_placement(self):
        side = self.workspace_side
        for k, r in enumerate(self.robots):
            for name, p in (("start", r.start), ("goal", r.goal)):
                if np.any(p < 0) or np.any(p > side):
                    raise ValueError(f"robot {k} {name} {p.tolist()} outside workspace")
        for attr in ("start", "goal"):
            pts = np.array([getattr(r, attr) for r in self.robots])
            d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
            rs = self.radii
            need = rs[:, None] + rs[None]
            np.fill_diagonal(d, np.inf)
            bad = np.argwhere(d < need)
            if len(bad):
                i, j = bad[0]
                raise ValueError(f"{attr}s of robots {i} and {j} overlap")
            if self.obstacles:
                d = np.linalg.norm(pts[:, None] - self.obstacle_centers[None], axis=-1)
                bad = np.argwhere(d < rs[:, None] + self.obstacle_radii[None])
                if len(bad):
                    i, j = bad[0]
                    raise ValueError(f"{attr} of robot {i} overlaps obstacle {j}")

    @property
    def num_robots(self) -> int:
        return len(self.robots)

    @property
    def radii(self) -> np.ndarray:
        return np.array([r.radius for r in self.robots])

    @property
    def v_max(self) -> np.ndarray:
        return np.array([r.v_max for r in self.robots])

    @property
    def starts(self) -> np.ndarray:
        return np.array([r.start for r in self.robots]).reshape(-1, 2)

    @property
    def goals(self) -> np.ndarray:
        return np.array([r.goal for r in self.robots]).reshape(-1, 2)

    @property
    def obstacle_centers(self) -> np.ndarray:
        return np.array([o.center for o in self.obstacles]).reshape(-1, 2)

    @property
    def obstacle_radii(self) -> np.ndarray:
        return np.array([o.radius for o in self.obstacles])

    @property
    def step_limits(self) -> np.ndarray:
        """Per-robot maximum displacement per step, v_max * dt."""
        return self.v_max * self.dt

    def straight_line_feasible(self) -> bool:
        span = np.linalg.norm(self.goals - self.starts, axis=-1)
        return bool(np.all(span / (self.horizon - 1) <= self.step_limits))

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "map_family": self.map_family,
            "workspace_side": self.workspace_side,
            "horizon": self.horizon,
            "dt": self.dt,
            "robots": [
                {"radius": r.radius, "start": r.start.tolist(),
                 "goal": r.goal.tolist(), "v_max": r.v_max}
                for r in self.robots
            ],
            "obstacles": [
                {"center": o.center.tolist(), "radius": o.radius} for o in self.obstacles
            ],
        }

    @classmethod
    def from_dict(cls, d: dict, validate: bool = True) -> ProblemInstance:
        return cls(
            robots=tuple(RobotSpec(r["radius"], r["start"], r["goal"], r["v_max"])
                         for r in d["robots"]),
            obstacles=tuple(Obstacle(o["center"], o["radius"])
                            for o in d.get("obstacles", [])),
            horizon=d.get("horizon", DEFAULT_HORIZON),
            dt=d.get("dt", DEFAULT_DT),
            workspace_side=d.get("workspace_side", DEFAULT_SIDE),
            map_family=d.get("map_family", "empty"),
            instance_id=d.get("instance_id", ""),
            validate=validate,
        )


@dataclass(frozen=True)
class Trajectory:
    """Positions of N_a robots over H steps, array of shape (N_a, H, 2)."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64)
        if pos.ndim != 3 or pos.shape[-1] != 2:
            raise ValueError(f"positions must have shape (N_a, H, 2), got {pos.shape}")
        if pos.shape[0] < 1 or pos.shape[1] < 2:
            raise ValueError(f"need N_a >= 1 and H >= 2, got {pos.shape[:2]}")
        if not np.all(np.isfinite(pos)):
            raise ValueError("trajectory has non-finite coordinates")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def num_robots(self) -> int:
        return self.positions.shape[0]

    @property
    def horizon(self) -> int:
        return self.positions.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return np.array_equal(self.positions, other.positions)

    __hash__ = None

    def check_matches(self, instance: ProblemInstance) -> None:
        if self.positions.shape != (instance.num_robots, instance.horizon, 2):
            raise ValueError(
                f"trajectory shape {self.positions.shape} does not match instance "
                f"({instance.num_robots}, {instance.horizon}, 2)")

    @classmethod
    def straight_line(cls, instance: ProblemInstance) -> Trajectory:
        s = np.linspace(0.0, 1.0, instance.horizon)[None, :, None]
        b = instance.starts[:, None, :]
        e = instance.goals[:, None, :]
        return cls(b + s * (e - b))

    def to_dict(self, instance_id: str = "") -> dict:
        return {"instance_id": instance_id, "positions": self.positions.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> Trajectory:
        return cls(np.asarray(d["positions"], dtype=np.float64))


def separation_radius_robots(i: int, j: int, instance: ProblemInstance) -> float:
    """Minimum centre distance between robots i and j (sum of radii)."""
    n = instance.num_robots
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"robot index out of range: ({i}, {j}) with {n} robots")
    if i == j:
        raise IndexError("robot pair must have i != j")
    return instance.robots[i].radius + instance.robots[j].radius


def separation_radius_obstacle(i: int, j: int, instance: ProblemInstance) -> float:
    if not 0 <= i < instance.num_robots:
        raise IndexError(f"robot index {i} out of range")
    if not 0 <= j < len(instance.obstacles):
        raise IndexError(f"obstacle index {j} out of range")
    return instance.robots[i].radius + instance.obstacles[j].radius


# json's float repr is the shortest round-trip form, so coordinates survive bit-exact.

def save_instance(instance: ProblemInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(), indent=1))


def load_instance(path: str | Path) -> ProblemInstance:
    return ProblemInstance.from_dict(json.loads(Path(path).read_text()))


def save_trajectory(traj: Trajectory, path: str | Path, instance_id: str = "") -> None:
    Path(path).write_text(json.dumps(traj.to_dict(instance_id)))


def load_trajectory(path: str | Path) -> tuple[Trajectory, str]:
    d = json.loads(Path(path).read_text())
    return Trajectory.from_dict(d), d.get("instance_id", "")


def make_instance(starts: Sequence, goals: Sequence, radius: float | Sequence = 0.05,
                  v_max: float | Sequence = 0.08, obstacles: Sequence = (), **kw) -> ProblemInstance:
    """Convenience constructor used by tests and scripts.

    ``obstacles`` is a sequence of ``(center, radius)`` pairs.
    """
    n = len(starts)
    radii = np.broadcast_to(np.asarray(radius, dtype=float), (n,))
    vmax = np.broadcast_to(np.asarray(v_max, dtype=float), (n,))
    robots = tuple(RobotSpec(radii[k], starts[k], goals[k], vmax[k]) for k in range(n))
    obs = tuple(Obstacle(c, r) for c, r in obstacles)
    return ProblemInstance(robots=robots, obstacles=obs, **kw)
