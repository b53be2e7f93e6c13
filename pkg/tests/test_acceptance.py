"""End-to-end acceptance checks at their stated tolerances.

Each test appends one PASS/FAIL line to the terminal summary before asserting,
so a full run reports every criterion even when some fail.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from oracles import single_robot_oracle, two_robot_midpoint_oracle
from smd.cli import main as cli_main
from smd.cli import sweep_zeta
from smd.constraints import convex_violation, nonconvex_residuals
from smd.core import MAP_FAMILIES, Trajectory, make_instance
from smd.diffusion import NoiseSchedule, ScoreModel, forward_sample, score_matching_loss
from smd.experiments import DeskConfig, max_violations, run_cases, suite, summarize, train_model
from smd.projection import (DualState, ProjectionConfig, _Residuals, augmented_lagrangian_value,
                            project_alm, project_convex)

pytestmark = pytest.mark.acceptance


def _log(acceptance_log, n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    acceptance_log.append(line)
    print(line)


# ----------------------------------------------------------------------------
# shared runs

@pytest.fixture(scope="module")
def desk():
    cfg = DeskConfig()
    train_insts = suite(cfg.families, cfg.train_maps, cfg.num_robots, cfg.train_cases, cfg.train_seed)
    model, _, _ = train_model(train_insts, cfg)
    ev = suite(cfg.families, cfg.num_maps, cfg.num_robots, cfg.cases, cfg.suite_seed)
    projected = run_cases(ev, model, cfg.sampler, mode="discrete")
    plain = run_cases(ev, model, replace(cfg.sampler, projection_enabled=False), mode="discrete")
    return projected, plain


@pytest.fixture(scope="module")
def corridor():
    cfg = replace(DeskConfig(), families=("corridor",))
    train_insts = suite(cfg.families, cfg.train_maps, 2, cfg.train_cases, cfg.train_seed)
    model, _, _ = train_model(train_insts, cfg, "corridor")
    ev = suite(cfg.families, 5, 2, 1, cfg.suite_seed)
    return run_cases(ev, model, cfg.sampler, mode="discrete")


# grid-oracle objectives for the micro-instances below (tests/oracles.py, 1e-2 refined to 1e-3)
MICRO_ORACLE = (0.01632458, 0.00766846, 0.03423283, 0.00846785, 0.01562821, 0.00176322,
                0.04118259, 0.00029529, 0.00277428, 0.00817736, 0.00312484, 0.00316925,
                0.01040907, 0.00658798, 0.03056817, 0.00138875, 0.02597565, 0.00732115,
                0.01386911, 0.00536311)


def micro_instance(k):
    """Even k: one robot, three free waypoints around a disc. Odd k: two robots, one free midpoint each."""
    rng = np.random.default_rng([7, k])
    if k % 2 == 0:
        cy = 1.0 + rng.uniform(-0.06, 0.06)
        centre = (1.0 + rng.uniform(-0.1, 0.1), cy)
        inst = make_instance([(0.4, 1.0)], [(1.6, 1.0)], radius=0.05, v_max=0.4, horizon=5,
                             obstacles=[(centre, rng.uniform(0.1, 0.18))],
                             instance_id=f"micro-{k:02d}", validate=False)
    else:
        inst = make_instance([(0.6, 1.0), (1.0, 0.6)], [(1.4, 1.0), (1.0, 1.4)],
                             radius=0.05 + rng.uniform(0, 0.05), v_max=0.5, horizon=3,
                             instance_id=f"micro-{k:02d}")
    x = Trajectory.straight_line(inst).positions.copy()
    x[:, 1:-1] += 0.03 * rng.standard_normal(x[:, 1:-1].shape)
    return inst, x


@pytest.fixture(scope="module")
def micro():
    out = []
    for k in range(20):
        inst, x = micro_instance(k)
        out.append((inst, x, project_alm(x, inst)))
    return out


# ----------------------------------------------------------------------------
# criteria

def test_1_desk_feasibility(desk, acceptance_log):
    projected, _ = desk
    s = summarize(projected)
    ok = len(projected) == 50 and s["S"] >= 0.95 and s["C"] <= 0.01
    _log(acceptance_log, 1, ok, f"runs={s['runs']} S={s['S']:.3f} (>= 0.95) C={s['C']:.4f} (<= 0.01) "
                                f"converged={s['converged']} time={s['seconds']:.0f}s")
    assert ok


def test_2_projection_ablation(desk, acceptance_log):
    projected, plain = desk
    a, b = summarize(projected), summarize(plain)
    ok = b["S"] <= 0.5 and b["collision_events"] > a["collision_events"]
    _log(acceptance_log, 2, ok, f"unprojected S={b['S']:.3f} (<= 0.5) collision events "
                                f"{b['collision_events']} vs {a['collision_events']} projected")
    assert ok


def test_3_corridor_swap(corridor, acceptance_log):
    s = summarize(corridor)
    worst_ep = max(c.record.endpoint_error for c in corridor)
    ok = len(corridor) == 5 and s["S"] >= 0.8 and worst_ep <= 1e-4
    _log(acceptance_log, 3, ok, f"S={s['S']:.2f} (>= 0.8) endpoint error {worst_ep:.1e} (<= 1e-4) "
                                f"time={s['seconds']:.0f}s")
    assert ok


def test_4_oracle_equivalence(micro, acceptance_log):
    t0 = time.perf_counter()
    gaps = []
    for (inst, x, res), ref in zip(micro, MICRO_ORACLE):
        obj = float(np.sum((res.trajectory.positions - x) ** 2))
        gaps.append(abs(obj - ref) / ref if res.converged else np.inf)
    # the frozen values are reproduced by the oracle itself (spot check two of them)
    for k in (0, 7):
        inst, x = micro_instance(k)
        fn = single_robot_oracle if inst.num_robots == 1 else two_robot_midpoint_oracle
        assert fn(inst, x)[0] == pytest.approx(MICRO_ORACLE[k], abs=1e-8)
    worst = max(gaps)
    ok = worst <= 0.05
    _log(acceptance_log, 4, ok, f"20 micro-instances, worst relative gap {worst:.4f} (<= 0.05) "
                                f"time={time.perf_counter() - t0:.0f}s")
    assert ok


def test_5_converged_outputs_respect_tolerances(desk, corridor, micro, acceptance_log):
    projected, _ = desk
    wn, wc = max_violations(projected + corridor)
    count = sum(c.converged for c in projected + corridor)
    for inst, _, res in micro:
        if res.converged:
            count += 1
            wn = max(wn, max(0.0, -nonconvex_residuals(res.trajectory, inst).min()))
            wc = max(wc, convex_violation(res.trajectory, inst).max())
    ok = wn <= 1e-4 and wc <= 1e-5
    _log(acceptance_log, 5, ok, f"{count} converged outputs, max nonconvex violation {wn:.1e} (<= 1e-4) "
                                f"convex {wc:.1e} (<= 1e-5)")
    assert ok


def test_6_zeta_trend(acceptance_log):
    inst = suite(("basic",), 1, 3, 1, 0)[0]
    t0 = time.perf_counter()
    _, summary = sweep_zeta([inst], (1.00, 1.05, 1.09), 0.1, 0,
                            replace(ProjectionConfig(), max_outer_iters=400))
    its = [s["outer_iterations"] for s in summary]
    ok = its[0] >= its[1] >= its[2] and its[0] > its[2] and all(s["converged"] for s in summary[1:])
    _log(acceptance_log, 6, ok, f"{inst.instance_id} outer iterations zeta 1.00/1.05/1.09 = "
                                f"{its[0]}/{its[1]}/{its[2]} time={time.perf_counter() - t0:.0f}s")
    assert ok


def _three_robots():
    return make_instance([(0.3, 0.3), (1.7, 0.3), (1.0, 1.7)], [(1.7, 1.7), (0.3, 1.7), (1.0, 0.3)],
                         radius=0.05, v_max=0.09, horizon=32,
                         obstacles=[((1.0, 1.0), 0.12), ((0.6, 1.3), 0.08)], map_family="basic")


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-12)


def _al_gradient_errors(rng, trials):
    inst = _three_robots()
    out = []
    for _ in range(trials):
        x = Trajectory.straight_line(inst).positions + rng.normal(0, 0.15, (3, 32, 2))
        a = x + rng.normal(0, 0.05, x.shape)
        ga, go, _, _ = _Residuals(inst, 1e-3, 1).values(x)
        dual = DualState(rng.normal(0, 0.05, ga.size), rng.normal(0, 0.05, go.size),
                         float(rng.uniform(0.5, 50)), float(rng.uniform(0.5, 50)))
        _, grad = augmented_lagrangian_value(x, a, dual, inst, 1e-3, return_grad=True)
        d = rng.normal(size=x.shape)
        h = 1e-6
        fd = (augmented_lagrangian_value(x + h * d, a, dual, inst, 1e-3)
              - augmented_lagrangian_value(x - h * d, a, dual, inst, 1e-3)) / (2 * h)
        out.append(_rel(fd, float(np.sum(grad * d))))
    return out


def _score_gradient_errors(rng, trials):
    model = ScoreModel(2, 8, NoiseSchedule(), hidden=(32, 32), time_dim=8, seed=3)
    batch = rng.uniform(0, 2, (4, 2, 8, 2))
    out = []
    for _ in range(trials):
        t = rng.integers(1, 26, size=4)
        noise = rng.standard_normal((4, model.dim))
        _, grads = score_matching_loss(model, batch, model.schedule, rng, t=t, noise=noise)
        dirs = [(rng.standard_normal(W.shape), rng.standard_normal(b.shape)) for W, b in model.params]
        an = sum(np.sum(gW * dW) + np.sum(gb * db) for (gW, gb), (dW, db) in zip(grads, dirs))
        vals = []
        for sign in (1, -1):
            saved = [(W.copy(), b.copy()) for W, b in model.params]
            for (W, b), (dW, db) in zip(model.params, dirs):
                W += sign * 1e-5 * dW
                b += sign * 1e-5 * db
            vals.append(score_matching_loss(model, batch, model.schedule, rng, t=t, noise=noise)[0])
            for (W, b), (W0, b0) in zip(model.params, saved):
                W[...] = W0
                b[...] = b0
        out.append(_rel((vals[0] - vals[1]) / 2e-5, an))
    return out


def _moment_z_scores(rng):
    s = NoiseSchedule()
    n = 10_000
    worst = 0.0
    for t in range(1, s.num_steps + 1):
        xt = forward_sample(np.full(n, 0.7), t, rng.standard_normal(n), s)
        var = 1.0 - s.alpha_bars[t]
        z_mean = abs(xt.mean() - np.sqrt(s.alpha_bars[t]) * 0.7) / np.sqrt(var / n)
        z_var = abs(xt.var(ddof=1) - var) / (var * np.sqrt(2.0 / (n - 1)))
        worst = max(worst, z_mean, z_var)
    return worst


def _projection_pairs(rng, pairs):
    inst = _three_robots()
    base = Trajectory.straight_line(inst).positions
    cfg = ProjectionConfig.for_sampling()
    expansion = idem = 0.0
    for _ in range(pairs):
        x = base + rng.normal(0, 0.3, base.shape)
        y = base + rng.normal(0, 0.3, base.shape)
        px = project_convex(x, inst, 1e-9).positions
        py = project_convex(y, inst, 1e-9).positions
        expansion = max(expansion, np.linalg.norm(px - py) - np.linalg.norm(x - y))
        res = project_alm(x, inst, cfg)
        if res.converged:
            again = project_alm(res.trajectory, inst, cfg)
            idem = max(idem, np.abs(again.trajectory.positions - res.trajectory.positions).max())
    return expansion, idem


def test_7_numerical_correctness(acceptance_log):
    rng = np.random.default_rng(2024)
    al = max(_al_gradient_errors(rng, 100))
    sm = max(_score_gradient_errors(rng, 100))
    z = _moment_z_scores(rng)
    expansion, idem = _projection_pairs(rng, 100)
    ok = al <= 1e-4 and sm <= 1e-4 and z <= 3.0 and expansion <= 1e-8 and idem <= 1e-3
    _log(acceptance_log, 7, ok, f"AL grad rel err {al:.1e}, score-matching grad rel err {sm:.1e} (<= 1e-4); "
                                f"moments max |z| {z:.2f} (<= 3); convex expansion {expansion:.1e}; "
                                f"ALM re-projection shift {idem:.1e}")
    assert ok


EXPECTED_COUNTS = {"empty": 750, "basic": 750, "dense": 750, "corridor": 250, "shelf": 750, "room": 750}


def test_8_benchmark_integrity(tmp_path, acceptance_log, capsys):
    import json

    t0 = time.perf_counter()
    for d in ("a", "b"):
        assert cli_main(["generate", "--seed", "0", "--out", str(tmp_path / d)]) == 0
    capsys.readouterr()
    files_a = sorted(p.name for p in (tmp_path / "a" / "instances").iterdir())
    files_b = sorted(p.name for p in (tmp_path / "b" / "instances").iterdir())
    identical = files_a == files_b and all(
        (tmp_path / "a" / "instances" / f).read_bytes() == (tmp_path / "b" / "instances" / f).read_bytes()
        for f in files_a)
    man = json.loads((tmp_path / "a" / "instances" / "manifest.json").read_text())
    counts = {f: man["families"][f]["count"] for f in MAP_FAMILIES}
    ok = identical and counts == EXPECTED_COUNTS and man["total"] == 4000 and len(files_a) == 4001
    _log(acceptance_log, 8, ok, f"total={man['total']} per family {counts} byte-identical={identical} "
                                f"time={time.perf_counter() - t0:.0f}s")
    assert ok
