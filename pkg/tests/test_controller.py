import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import free_snapshot, wall_snapshot
from rmpnav.controller import (FollowerConfig, ReactiveController, ReferencePath, Status, Variant,
                               carrot, path_tracking_error)
from rmpnav.filters import MapSnapshot, run_filter_chain
from rmpnav.gridmap import GridGeometry
from rmpnav.rmp import RobotState
from rmpnav.se2 import Pose2, Tangent2
from rmpnav.sim import step_body
from rmpnav.tuning import Tuning

STRAIGHT = ReferencePath([Pose2(0, 0, 0), Pose2(10, 0, 0)])
L_PATH = ReferencePath([Pose2(0, 0, 0), Pose2(4, 0, math.pi / 2), Pose2(4, 3, math.pi / 2)])

poses = st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(-3, 3))


# reference path

@settings(max_examples=100, deadline=None)
@given(st.lists(poses, min_size=1, max_size=8))
def test_path_resampled_and_strictly_increasing(raw):
    path = ReferencePath([Pose2(*p) for p in raw])
    assert np.all(path.seg_len <= 0.5 + 1e-9)
    assert np.all(np.diff(path.arclength) > 0)
    assert path.arclength[0] == 0.0


def test_path_rejects_empty_and_keeps_final_pose():
    with pytest.raises(ValueError):
        ReferencePath([])
    assert L_PATH.final == Pose2(4, 3, math.pi / 2)
    assert L_PATH.length == pytest.approx(7.0)


# carrot

def test_carrot_from_start():
    goal, s = carrot(STRAIGHT, Pose2(0, 0, 0), 1.5)
    assert s == 0.0
    assert (goal.x, goal.y, goal.theta) == pytest.approx((1.5, 0.0, 0.0))


def test_carrot_clamped_to_final_pose():
    goal, _ = carrot(STRAIGHT, Pose2(9.2, 0.1, 0.0), 1.5)
    assert goal == STRAIGHT.final


def test_carrot_ignores_lateral_offset():
    goal, s = carrot(STRAIGHT, Pose2(3.0, 0.4, 0.3), 1.5)
    assert s == pytest.approx(3.0)
    assert (goal.x, goal.y) == pytest.approx((4.5, 0.0))


def brute_projection(path, p, step=1e-3):
    s = np.arange(0.0, path.length + step, step)
    pts = np.array([path.pose_at(v).translation for v in s])
    d = np.hypot(pts[:, 0] - p[0], pts[:, 1] - p[1])
    return s[np.argmin(d)], d.min()


@settings(max_examples=60, deadline=None)
@given(st.floats(-1, 5), st.floats(-1, 4))
def test_projection_matches_dense_sampling(x, y):
    s = L_PATH.project((x, y))
    _, d_ref = brute_projection(L_PATH, (x, y), step=2e-3)
    p = L_PATH.pose_at(s).translation
    assert math.hypot(p[0] - x, p[1] - y) <= d_ref + 1e-9


def test_projection_tie_goes_to_larger_arclength():
    # equidistant from both legs of the corner
    s = L_PATH.project((3.0, 1.0))
    assert s == pytest.approx(5.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-1, 5), st.floats(-1, 4)), min_size=2, max_size=30))
def test_carrot_arclength_never_decreases(points):
    cfg = FollowerConfig()
    ctrl = ReactiveController(L_PATH, config=cfg)
    last = -1.0
    for x, y in points:
        res = ctrl.tick(RobotState(Pose2(x, y, 0.0)), free_snapshot())
        s_goal = L_PATH.project(res.carrot.translation)
        assert ctrl.progress >= last
        assert s_goal >= ctrl.progress - 1e-9
        last = ctrl.progress
        if res.status.state.terminal:
            break


# path tracking error

def test_pte_zero_on_samples_and_constant_offset():
    assert np.allclose(path_tracking_error(list(L_PATH.poses), L_PATH), 0.0)
    shifted = [Pose2(x, 0.3, 0.0) for x in np.linspace(0, 10, 21)]
    assert np.allclose(path_tracking_error(shifted, STRAIGHT), 0.3)


@settings(max_examples=30, deadline=None)
@given(st.lists(poses, min_size=1, max_size=10))
def test_pte_matches_dense_sampling(executed):
    s = np.arange(0.0, L_PATH.length + 1e-3, 1e-3)
    dense = np.array([L_PATH.pose_at(v).translation for v in s])
    pte = path_tracking_error([Pose2(*p) for p in executed], L_PATH)
    for (x, y, _), e in zip(executed, pte):
        ref = np.min(np.hypot(dense[:, 0] - x, dense[:, 1] - y))
        assert e <= ref + 1e-12
        assert ref - e <= 1e-3


# tick

def test_tick_at_goal_reports_reached_with_zero_twist():
    ctrl = ReactiveController(STRAIGHT)
    res = ctrl.tick(RobotState(Pose2(10.05, 0.05, 0.1), Tangent2(0.2, 0.0, 0.0)), free_snapshot())
    assert res.status.state is Status.GOAL_REACHED
    assert res.twist == Tangent2(0.0, 0.0, 0.0)


def test_reached_requires_heading():
    ctrl = ReactiveController(STRAIGHT)
    res = ctrl.tick(RobotState(Pose2(10.0, 0.0, 0.5)), free_snapshot())
    assert res.status.state is Status.RUNNING


def sealed_snapshot():
    snap = free_snapshot()
    layers = dict(snap.layers)
    layers["f_gdf"] = np.full(snap.geometry.shape, np.inf)
    return MapSnapshot(snap.geometry, layers, (0, 0))


@pytest.mark.parametrize("snap", [sealed_snapshot(), MapSnapshot(free_snapshot().geometry, free_snapshot().layers, None)])
def test_unreachable_after_debounce(snap):
    ctrl = ReactiveController(STRAIGHT)
    st_ = RobotState(Pose2(0, 0, 0))
    states = [ctrl.tick(st_, snap).status.state for _ in range(6)]
    assert states[:4] == [Status.RUNNING] * 4
    assert states[4] is Status.GOAL_UNREACHABLE


def test_unreachable_debounce_resets():
    ctrl = ReactiveController(STRAIGHT)
    st_ = RobotState(Pose2(0, 0, 0))
    for snap in [sealed_snapshot()] * 4 + [free_snapshot()] + [sealed_snapshot()] * 4:
        assert ctrl.tick(st_, snap).status.state is Status.RUNNING


def test_stuck_after_window_without_motion():
    cfg = FollowerConfig(stuck_window=1.0)
    ctrl = ReactiveController(STRAIGHT, config=cfg)
    st_ = RobotState(Pose2(0, 0, 0))
    states = [ctrl.tick(st_, free_snapshot()).status.state for _ in range(12)]
    assert states[:10] == [Status.RUNNING] * 10
    assert states[10] is Status.STUCK


def test_tick_is_deterministic():
    st_ = RobotState(Pose2(1.0, 0.2, 0.1), Tangent2(0.2, 0.05, 0.0), Tangent2(0.1, 0.0, 0.0))
    a = ReactiveController(L_PATH).tick(st_, free_snapshot())
    b = ReactiveController(L_PATH).tick(st_, free_snapshot())
    assert a.twist == b.twist and a.accel == b.accel and a.status == b.status


def test_follower_config_validation():
    with pytest.raises(ValueError):
        FollowerConfig(d_carrot=0.0)
    with pytest.raises(ValueError):
        FollowerConfig(unreachable_ticks=0)


@pytest.mark.parametrize("variant,expected", [
    (Variant.FULL_RMP, {"gdf_goal", "freespace_goal", "obstacle", "heading", "damping", "regularization"}),
    (Variant.POTENTIAL_FIELD, {"freespace_goal", "obstacle", "damping", "regularization"}),
    (Variant.GDF_ONLY, {"gdf_goal", "freespace_goal", "damping", "regularization"}),
    (Variant.GDF_AVOIDANCE, {"gdf_goal", "obstacle", "heading", "damping", "regularization"}),
])
def test_variant_policy_sets(variant, expected):
    ctrl = ReactiveController(STRAIGHT, variant)
    st_ = RobotState(Pose2(0, 0, 0), Tangent2(0.3, 0, 0))
    pols = ctrl.assemble(st_, free_snapshot(), Pose2(1.5, 0, 0))
    assert {p.name for p in pols} == expected


def test_potential_field_metrics_are_fixed():
    ctrl = ReactiveController(STRAIGHT, Variant.POTENTIAL_FIELD)
    pols = ctrl.assemble(RobotState(Pose2(0, 0, 0)), wall_snapshot((0, 1), 2.0), Pose2(5.0, 0, 0))
    assert sum(p.name == "obstacle" for p in pols) == 3
    for p in pols:
        if p.name in ("freespace_goal", "obstacle"):
            assert np.allclose(p.M, np.eye(p.M.shape[0]))


def test_free_straight_path_steady_state():
    # long enough that a growing heading/lateral oscillation would show
    tuning = Tuning.default()
    geo = GridGeometry()
    path = ReferencePath([Pose2(0, 0, 0), Pose2(200, 0, 0)])
    ctrl = ReactiveController(path, Variant.FULL_RMP, tuning.rmp, tuning.follower)
    st_ = RobotState(Pose2(0, 0, 0))
    twists = []
    for _ in range(250):
        g = geo.with_origin(Pose2(round(st_.pose.x / 0.04) * 0.04, round(st_.pose.y / 0.04) * 0.04, 0.0))
        goal = ctrl.peek_goal(st_.pose)
        snap = run_filter_chain(np.zeros(g.shape), g, goal.translation, tuning.filters, ground_height=0.0)
        res = ctrl.tick(st_, snap)
        assert res.status.state is Status.RUNNING
        twists.append(res.twist)
        pose = st_.pose
        for _ in range(10):
            pose = step_body(pose, res.twist, 0.01)
        st_ = RobotState(pose, res.twist, res.accel)
    vy = np.abs([t.vy for t in twists])
    wz = np.abs([t.wtheta for t in twists])
    assert min(t.vx for t in twists[-50:]) > 0.45
    assert vy[-50:].max() < 0.5 * vy[50:100].max()
    assert wz[-50:].max() < 0.5 * wz[50:100].max()
    assert vy[-50:].max() < 5e-3 and wz[-50:].max() < 5e-3
