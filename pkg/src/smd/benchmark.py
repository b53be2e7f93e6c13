"""Benchmark maps, start/goal assignment and suite generation.

Random families (empty, basic, dense) scatter disc obstacles. The practical
families (corridor, shelf, room) are parametric layouts whose walls are
chains of discs spaced no further apart than their radius, so the disc
separation constraint covers them without gaps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .core import MAP_FAMILIES, Obstacle, ProblemInstance, RobotSpec

Zone = tuple[float, float, float, float]  # x0, y0, x1, y1 (robot centres)


class AssignmentError(RuntimeError):
    pass


@dataclass
class LayoutParams:
    side: float = 2.0
    robot_radius: float = 0.05
    corridor_robot_radius: float = 0.1
    obstacle_radius: tuple[float, float] = (0.05, 0.1)
    num_obstacles: dict = field(default_factory=lambda: {"basic": 10, "dense": 20})
    wall_radius: float = 0.05
    # corridor: passage free width = 2 * robot radius + clearance
    corridor_clearance: float = 0.05
    chamber_width_diameters: float = 3.0
    chamber_length: float = 0.6
    chamber_shift: float = 0.15
    # shelf: 2 rows x 3 capsule shelves
    shelf_rows: int = 2
    shelf_cols: int = 3
    shelf_radius: float = 0.1
    aisle_width_diameters: float = 3.0
    shelf_length: tuple[float, float] = (0.3, 0.45)
    # room: 2 x 2 rooms, one door per shared wall
    door_width_diameters: float = 2.5
    # extra gap kept between placed objects beyond the sum of radii
    placement_gap: float = 0.02
    horizon: int = 64
    dt: float = 1.0
    v_max: float = 0.08


@dataclass
class MapLayout:
    family: str
    obstacles: list[Obstacle]
    start_zones: list[Zone]
    goal_zones: list[Zone]
    robot_radius: float
    # room maps: each robot's goal must lie in a different zone than its start
    distinct_zones: bool = False
    swap_pairs: bool = False


def _chain(p0, p1, radius: float) -> list[Obstacle]:
    """Discs of ``radius`` along the segment p0-p1 with spacing <= radius."""
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    L = np.linalg.norm(p1 - p0)
    n = max(1, int(np.ceil(L / radius)))
    return [Obstacle(p0 + (p1 - p0) * k / n, radius) for k in range(n + 1)]


def _random_discs(rng, count: int, p: LayoutParams) -> list[Obstacle]:
    lo, hi = p.obstacle_radius
    gap = 2 * p.robot_radius + p.placement_gap
    obs: list[Obstacle] = []
    tries = 0
    while len(obs) < count:
        tries += 1
        if tries > 100000:
            raise AssignmentError(f"could not place {count} obstacles")
        r = rng.uniform(lo, hi)
        c = rng.uniform(r, p.side - r, size=2)
        if all(np.linalg.norm(c - o.center) >= r + o.radius + gap for o in obs):
            obs.append(Obstacle(c, r))
    return obs


def _corridor(p: LayoutParams, rng) -> MapLayout:
    r = p.corridor_robot_radius
    wr = p.wall_radius
    mid = p.side / 2
    half_pass = (2 * r + p.corridor_clearance) / 2
    half_ch = p.chamber_width_diameters * 2 * r / 2
    # per-map variation: chamber centre shifted along the corridor
    cx = mid + float(rng.uniform(-p.chamber_shift, p.chamber_shift))
    cx0, cx1 = cx - p.chamber_length / 2, cx + p.chamber_length / 2
    obs: list[Obstacle] = []
    for sgn in (-1, 1):
        yp = mid + sgn * (half_pass + wr)
        yc = mid + sgn * (half_ch + wr)
        obs += _chain((0.0, yp), (cx0, yp), wr)
        obs += _chain((cx1, yp), (p.side, yp), wr)
        obs += _chain((cx0, yp), (cx0, yc), wr)
        obs += _chain((cx1, yp), (cx1, yc), wr)
        obs += _chain((cx0, yc), (cx1, yc), wr)
    dy = max(0.0, half_pass - r - p.placement_gap)
    left = (r + 0.02, mid - dy, r + 0.3, mid + dy)
    right = (p.side - r - 0.3, mid - dy, p.side - r - 0.02, mid + dy)
    return MapLayout("corridor", _dedupe(obs), [left, right], [right, left], r, swap_pairs=True)


def _shelf(p: LayoutParams, rng) -> MapLayout:
    r = p.robot_radius
    sr = p.shelf_radius
    length = float(rng.uniform(*p.shelf_length))
    aisle = p.aisle_width_diameters * 2 * r
    pitch_x = 2 * sr + aisle
    xs = p.side / 2 + (np.arange(p.shelf_cols) - (p.shelf_cols - 1) / 2) * pitch_x
    pitch_y = length + 2 * sr + aisle
    ys = p.side / 2 + (np.arange(p.shelf_rows) - (p.shelf_rows - 1) / 2) * pitch_y
    obs: list[Obstacle] = []
    for x in xs:
        for y in ys:
            obs += _chain((x, y - length / 2), (x, y + length / 2), sr)
    edge = r + 0.02
    strip = 0.18
    left = (edge, edge, edge + strip, p.side - edge)
    right = (p.side - edge - strip, edge, p.side - edge, p.side - edge)
    return MapLayout("shelf", obs, [left, right], [right, left], r, distinct_zones=True)


def _room(p: LayoutParams, rng) -> MapLayout:
    r = p.robot_radius
    wr = p.wall_radius
    mid = p.side / 2
    door = p.door_width_diameters * 2 * r + 2 * wr  # gap between adjacent disc centres
    obs: list[Obstacle] = []
    # four half-walls meeting at the centre, each with one door
    for (a0, a1), vertical in (((0.0, mid), True), ((mid, p.side), True),
                               ((0.0, mid), False), ((mid, p.side), False)):
        lo, hi = a0 + 0.25, a1 - 0.25 - door
        d0 = float(rng.uniform(lo, hi))
        d1 = d0 + door
        for s0, s1 in ((a0, d0), (d1, a1)):
            if vertical:
                obs += _chain((mid, s0), (mid, s1), wr)
            else:
                obs += _chain((s0, mid), (s1, mid), wr)
    inset = r + wr + 0.02
    rooms = [(0.0 + 0.02 + r, 0.0 + 0.02 + r, mid - inset, mid - inset),
             (mid + inset, 0.0 + 0.02 + r, p.side - 0.02 - r, mid - inset),
             (0.0 + 0.02 + r, mid + inset, mid - inset, p.side - 0.02 - r),
             (mid + inset, mid + inset, p.side - 0.02 - r, p.side - 0.02 - r)]
    return MapLayout("room", _dedupe(obs), rooms, rooms, r, distinct_zones=True)


def _dedupe(obs: list[Obstacle]) -> list[Obstacle]:
    out: list[Obstacle] = []
    seen = set()
    for o in obs:
        key = (round(float(o.center[0]), 9), round(float(o.center[1]), 9), o.radius)
        if key not in seen:
            seen.add(key)
            out.append(o)
    return out


def generate_map(family: str, map_seed, params: LayoutParams | None = None) -> MapLayout:
    if family not in MAP_FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    p = params or LayoutParams()
    rng = np.random.default_rng(map_seed)
    whole = (p.robot_radius, p.robot_radius, p.side - p.robot_radius, p.side - p.robot_radius)
    if family == "empty":
        return MapLayout(family, [], [whole], [whole], p.robot_radius)
    if family in ("basic", "dense"):
        obs = _random_discs(rng, p.num_obstacles[family], p)
        return MapLayout(family, obs, [whole], [whole], p.robot_radius)
    if family == "corridor":
        return _corridor(p, rng)
    if family == "shelf":
        return _shelf(p, rng)
    return _room(p, rng)


def _clear(c, placed, r, obstacles, gap) -> bool:
    for q in placed:
        if np.linalg.norm(c - q) < 2 * r + gap:
            return False
    for o in obstacles:
        if np.linalg.norm(c - o.center) < r + o.radius + gap:
            return False
    return True


def _draw(rng, zone: Zone, placed, r, obstacles, gap, budget: int, what: str):
    x0, y0, x1, y1 = zone
    for _ in range(budget):
        c = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
        if _clear(c, placed, r, obstacles, gap):
            return c
    raise AssignmentError(f"rejection budget exhausted placing {what} in zone {zone}")


def assign_tasks(layout: MapLayout, num_robots: int, case_seed,
                 params: LayoutParams | None = None, budget: int = 2000) -> list[tuple[np.ndarray, np.ndarray]]:
    """Start/goal pairs with clearance from each other and from obstacles."""
    p = params or LayoutParams()
    rng = np.random.default_rng(case_seed)
    r = layout.robot_radius
    gap = p.placement_gap
    starts: list[np.ndarray] = []
    goals: list[np.ndarray] = []
    nz = len(layout.start_zones)
    for k in range(num_robots):
        if layout.swap_pairs:
            zs = k % nz
            zg = zs
        else:
            zs = int(rng.integers(nz))
            zg = int(rng.integers(len(layout.goal_zones)))
            if layout.distinct_zones and len(layout.goal_zones) > 1:
                while layout.goal_zones[zg] == layout.start_zones[zs]:
                    zg = int(rng.integers(len(layout.goal_zones)))
        starts.append(_draw(rng, layout.start_zones[zs], starts, r, layout.obstacles, gap, budget,
                            f"start of robot {k}"))
        goals.append(_draw(rng, layout.goal_zones[zg], goals, r, layout.obstacles, gap, budget,
                           f"goal of robot {k}"))
    return list(zip(starts, goals))


def build_instance(layout: MapLayout, tasks, instance_id: str,
                   params: LayoutParams | None = None) -> ProblemInstance:
    p = params or LayoutParams()
    robots = tuple(RobotSpec(layout.robot_radius, s, g, p.v_max) for s, g in tasks)
    return ProblemInstance(robots=robots, obstacles=tuple(layout.obstacles), horizon=p.horizon,
                           dt=p.dt, workspace_side=p.side, map_family=layout.family,
                           instance_id=instance_id)


@dataclass
class BenchmarkSpec:
    family: str
    num_maps: int = 25
    robots_counts: list[int] = field(default_factory=lambda: [3, 6, 9])
    cases_per_config: int = 10
    seed: int = 0
    params: LayoutParams = field(default_factory=LayoutParams)

    def __post_init__(self):
        if self.family not in MAP_FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "corridor":
            self.robots_counts = [2]
        if self.num_maps < 1 or self.cases_per_config < 1 or not self.robots_counts:
            raise ValueError("counts must be positive")
        if any(n < 1 for n in self.robots_counts):
            raise ValueError("robot counts must be positive")


def instance_id(family: str, map_index: int, num_robots: int, case: int) -> str:
    return f"{family}-m{map_index:02d}-n{num_robots}-c{case:02d}"


def generate_suite(spec: BenchmarkSpec) -> tuple[list[ProblemInstance], dict]:
    """All instances of one family plus a manifest describing how they were made.

    Every map and case has its own RNG stream keyed by (seed, family, map,
    robots, case), so generation order cannot change the output.
    """
    fam = MAP_FAMILIES.index(spec.family)
    instances = []
    entries = []
    for m in range(spec.num_maps):
        map_seed = [spec.seed, fam, m]
        layout = generate_map(spec.family, map_seed, spec.params)
        for n in spec.robots_counts:
            for c in range(spec.cases_per_config):
                case_seed = [spec.seed, fam, m, n, c]
                tasks = assign_tasks(layout, n, case_seed, spec.params)
                iid = instance_id(spec.family, m, n, c)
                instances.append(build_instance(layout, tasks, iid, spec.params))
                entries.append({"instance_id": iid, "family": spec.family, "map_index": m,
                                "num_robots": n, "case": c, "map_seed": map_seed,
                                "case_seed": case_seed})
    manifest = {
        "suite_seed": spec.seed,
        "families": {spec.family: {"num_maps": spec.num_maps, "robots_counts": spec.robots_counts,
                                   "cases_per_config": spec.cases_per_config,
                                   "count": len(instances)}},
        "params": asdict(spec.params),
        "instances": entries,
    }
    return instances, manifest


def merge_manifests(manifests: list[dict]) -> dict:
    out = {"suite_seed": manifests[0]["suite_seed"], "families": {}, "params": manifests[0]["params"],
           "instances": []}
    for m in manifests:
        out["families"].update(m["families"])
        out["instances"].extend(m["instances"])
    out["total"] = len(out["instances"])
    return out


def write_suite(instances: list[ProblemInstance], manifest: dict, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for inst in instances:
        (out / f"{inst.instance_id}.json").write_text(json.dumps(inst.to_dict(), indent=1))
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
