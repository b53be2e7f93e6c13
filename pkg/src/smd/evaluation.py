"""Benchmark metrics: success rate, path length, acceleration and collision ratio."""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .constraints import EVAL_TOL, check_collisions_interpolated, convex_violation
from .core import ProblemInstance, Trajectory


class MissingRecordsError(ValueError):
    """Some manifest instances have no evaluation record."""

    def __init__(self, missing: list[str]):
        shown = ", ".join(missing[:20]) + (" ..." if len(missing) > 20 else "")
        super().__init__(f"{len(missing)} instance(s) without a record: {shown}")
        self.missing = missing


@dataclass
class CaseRecord:
    instance_id: str
    family: str
    num_robots: int
    success: bool
    path_length_per_robot: float
    acceleration: float
    collision_ratio: float
    num_collisions: int
    endpoint_error: float
    velocity_violation: float


@dataclass
class AggregateRow:
    family: str
    num_robots: int
    cases: int
    S: float
    L: float | None
    A: float | None
    C: float


@dataclass
class EvaluationReport:
    per_instance: list[CaseRecord]
    aggregate: list[AggregateRow] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"per_instance": [asdict(r) for r in self.per_instance],
                "aggregate": [asdict(r) for r in self.aggregate]}


def path_length(pos: np.ndarray) -> float:
    """Mean over robots of the summed segment lengths."""
    seg = np.linalg.norm(np.diff(pos, axis=1), axis=-1)
    return float(seg.sum(axis=1).mean())


def acceleration(pos: np.ndarray, dt: float) -> float:
    """Mean over robots and steps of |v_h - v_{h-1}|, with v the per-step velocity."""
    vel = np.diff(pos, axis=1) / dt
    if vel.shape[1] < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(vel, axis=1), axis=-1).mean())


def _parse_mode(mode: str, substeps: int) -> int:
    if mode == "discrete":
        return 1
    if mode == "interpolated":
        if substeps < 1:
            raise ValueError("substeps must be >= 1")
        return substeps
    raise ValueError(f"unknown evaluation mode {mode!r}")


def evaluate_case(traj: Trajectory | np.ndarray, instance: ProblemInstance,
                  mode: str = "interpolated", substeps: int = 4) -> CaseRecord:
    """Score one trajectory set.

    Separation is checked strictly (any negative residual is a collision);
    endpoints and speed limits are allowed an error of 1e-4.
    """
    pos = traj.positions if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    if pos.shape != (instance.num_robots, instance.horizon, 2):
        raise ValueError(f"trajectory shape {pos.shape} does not match instance "
                         f"({instance.num_robots}, {instance.horizon}, 2)")
    events = check_collisions_interpolated(pos, instance, _parse_mode(mode, substeps), tol=0.0)
    hit = set()
    for e in events:
        hit.add(e.i)
        if e.kind == "robot_pair":
            hit.add(e.j)
    cv = convex_violation(pos, instance)
    success = not events and cv.endpoint_error <= EVAL_TOL and cv.velocity_error <= EVAL_TOL
    return CaseRecord(
        instance_id=instance.instance_id,
        family=instance.map_family,
        num_robots=instance.num_robots,
        success=bool(success),
        path_length_per_robot=path_length(pos),
        acceleration=acceleration(pos, instance.dt),
        collision_ratio=len(hit) / instance.num_robots,
        num_collisions=len(events),
        endpoint_error=float(cv.endpoint_error),
        velocity_violation=float(cv.velocity_error),
    )


def aggregate(records: list[CaseRecord], manifest: dict | None = None) -> EvaluationReport:
    """Group records by (family, N_a); L and A average over successful cases only.

    With a manifest, every listed instance must have a record.
    """
    if manifest is not None:
        have = {r.instance_id for r in records}
        missing = [e["instance_id"] for e in manifest["instances"] if e["instance_id"] not in have]
        if missing:
            raise MissingRecordsError(missing)
    groups: dict[tuple[str, int], list[CaseRecord]] = defaultdict(list)
    for r in records:
        groups[(r.family, r.num_robots)].append(r)
    rows = []
    for (fam, n), rs in sorted(groups.items()):
        ok = [r for r in rs if r.success]
        rows.append(AggregateRow(
            family=fam, num_robots=n, cases=len(rs),
            S=sum(r.success for r in rs) / len(rs),
            L=float(np.mean([r.path_length_per_robot for r in ok])) if ok else None,
            A=float(np.mean([r.acceleration for r in ok])) if ok else None,
            C=float(np.mean([r.collision_ratio for r in rs])),
        ))
    return EvaluationReport(list(records), rows)


def _fmt(v) -> str:
    return "" if v is None else repr(v)


def write_report(report: EvaluationReport, out_dir: str | Path, stem: str = "report") -> dict[str, Path]:
    """JSON with everything, a CSV of the S/L/A/C table and a plot-ready success-rate file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"json": out / f"{stem}.json", "csv": out / f"{stem}.csv",
             "success_rates": out / "success_rates.csv"}
    paths["json"].write_text(json.dumps(report.to_dict(), indent=1))
    with open(paths["csv"], "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["family", "num_robots", "cases", "S", "L", "A", "C"])
        for r in report.aggregate:
            w.writerow([r.family, r.num_robots, r.cases, _fmt(r.S), _fmt(r.L), _fmt(r.A), _fmt(r.C)])
    with open(paths["success_rates"], "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["label", "success_rate"])
        for r in report.aggregate:
            w.writerow([f"{r.family}/{r.num_robots}", repr(r.S)])
    return paths
