import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smd.constraints import (check_collisions_interpolated, convex_violation, is_feasible,
                             nonconvex_residuals, pair_indices, robot_pair_residuals)
from smd.core import Trajectory, make_instance


def test_swap_midpoint_collision(swap_instance):
    # both robots sit at (1, 1) at h = 10
    traj = Trajectory.straight_line(swap_instance)
    res = nonconvex_residuals(traj, swap_instance)
    assert res.robot_pairs.min() == pytest.approx(-0.01)
    ok, rep = is_feasible(traj, swap_instance)
    assert not ok
    assert rep.kind == "robot_pair" and rep.indices == (0, 1, 10)
    assert rep.value == pytest.approx(0.01)


def test_crossing_between_steps_needs_interpolation():
    inst = make_instance([(0.5, 1.0), (1.5, 1.0)], [(1.5, 1.0), (0.5, 1.0)], radius=0.05,
                         v_max=0.25, horizon=6)
    traj = Trajectory.straight_line(inst)
    assert check_collisions_interpolated(traj, inst, substeps=1) == []
    events = check_collisions_interpolated(traj, inst, substeps=4)
    assert events and {e.time for e in events} >= {2.5}
    assert all(e.kind == "robot_pair" and (e.i, e.j) == (0, 1) for e in events)


def test_substeps_one_matches_discrete(rng):
    inst = make_instance([(0.3, 0.3), (1.7, 0.3), (1.0, 1.7)], [(1.7, 1.7), (0.3, 1.7), (1.0, 0.3)],
                         radius=0.08, v_max=0.2, horizon=16, obstacles=[((1.0, 1.0), 0.15)])
    for _ in range(10):
        pos = rng.uniform(0, 2, (3, 16, 2))
        events = check_collisions_interpolated(pos, inst, substeps=1)
        res = nonconvex_residuals(pos, inst)
        assert len(events) == int((res.robot_pairs < 0).sum() + (res.obstacle_pairs < 0).sum())


def test_convex_violation_components():
    inst = make_instance([(0.5, 0.5)], [(1.0, 0.5)], v_max=0.2, horizon=4)
    pos = np.array([[[0.5, 0.5], [0.9, 0.5], [1.0, 0.5], [1.0, 0.6]]])
    cv = convex_violation(pos, inst)
    assert cv.endpoint_error == pytest.approx(0.1)
    assert cv.velocity_error == pytest.approx(0.2)
    assert cv.workspace_error == 0.0
    pos[0, 1] = [-0.1, 0.5]
    assert convex_violation(pos, inst).workspace_error == pytest.approx(0.1)


def test_tolerance_semantics():
    inst = make_instance([(0.5, 1.0), (0.75, 1.0)], [(0.5, 1.5), (0.75, 1.5)], radius=0.125, v_max=0.11,
                         horizon=6)
    traj = Trajectory.straight_line(inst)
    # robots touch exactly: residual 0 counts as feasible
    assert is_feasible(traj, inst, tol=0.0)[0]
    pos = traj.positions.copy()
    pos[1, 2, 0] -= 1e-6
    ok_strict, rep = is_feasible(pos, inst, tol=0.0)
    assert not ok_strict and rep.kind == "robot_pair"
    assert is_feasible(pos, inst, tol=1e-6)[0]
    with pytest.raises(ValueError):
        is_feasible(pos, inst, tol=-1)


def test_report_to_dict(swap_instance):
    _, rep = is_feasible(Trajectory.straight_line(swap_instance), swap_instance)
    d = rep.to_dict("swap")
    assert d["instance_id"] == "swap" and d["worst_constraint"]["kind"] == "robot_pair"


def test_pair_order():
    i, j = pair_indices(4)
    assert list(zip(i.tolist(), j.tolist())) == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def test_shape_mismatch_raises(swap_instance):
    with pytest.raises(ValueError):
        convex_violation(np.zeros((3, 21, 2)), swap_instance)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 5))
def test_residuals_symmetric_under_robot_relabeling(seed, n):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0, 2, (n, 7, 2))
    radii = rng.uniform(0.02, 0.1, n)
    perm = rng.permutation(n)
    a = np.sort(robot_pair_residuals(pos, radii).ravel())
    b = np.sort(robot_pair_residuals(pos[perm], radii[perm]).ravel())
    np.testing.assert_allclose(a, b, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 6))
def test_more_substeps_never_hide_discrete_collisions(seed, substeps):
    rng = np.random.default_rng(seed)
    inst = make_instance([(0.3, 0.3), (1.7, 1.7)], [(1.7, 0.3), (0.3, 1.7)], radius=0.1, v_max=0.5,
                         horizon=8, obstacles=[((1.0, 1.0), 0.2)])
    pos = rng.uniform(0, 2, (2, 8, 2))
    discrete = {(e.kind, e.i, e.j, e.time) for e in check_collisions_interpolated(pos, inst, 1)}
    dense = {(e.kind, e.i, e.j, e.time) for e in check_collisions_interpolated(pos, inst, substeps)}
    assert discrete <= dense
