"""
Tests for forward and inverse kinematics of the held object.
"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from graspalign.core.config import IKOptions
from graspalign.core.errors import IKError, InputError
from graspalign.models.geometry import Rotation3, Transform3
from graspalign.models.kinematics import PointsOfInterest
from graspalign.services.kinematics import KinematicsService
from graspalign.services.se3 import apply_points, geodesic_angle, se3_distance

Q_DESK = np.array([0.3, 0.4, -0.8, 0.2, 0.5, -0.3])
H = Transform3(Rotation3.about_axis([0.0, 1.0, 0.0], 0.3), np.array([0.02, 0.0, 0.05]))


def test_planar_fk(planar_chain):
    """Test the two-link arm at known configurations."""
    assert np.allclose(KinematicsService.fk(planar_chain, [0.0, 0.0]).t, [2.0, 0.0, 0.0])
    assert np.allclose(KinematicsService.fk(planar_chain, [np.pi / 2, 0.0]).t, [0.0, 2.0, 0.0])
    assert np.allclose(KinematicsService.fk(planar_chain, [0.0, np.pi / 2]).t, [1.0, 1.0, 0.0])


def test_fk_rejects_wrong_length(planar_chain):
    """Test that a configuration of the wrong size is rejected."""
    with pytest.raises(InputError):
        KinematicsService.fk(planar_chain, [0.0, 0.0, 0.0])


def test_jacobian_matches_finite_differences(desk_chain):
    """Test the geometric Jacobian against central differences."""
    J = KinematicsService.jacobian(desk_chain, Q_DESK)
    h = 1e-6
    base = KinematicsService.fk(desk_chain, Q_DESK)
    for i in range(desk_chain.dof):
        dq = np.zeros(desk_chain.dof)
        dq[i] = h
        plus = KinematicsService.fk(desk_chain, Q_DESK + dq)
        minus = KinematicsService.fk(desk_chain, Q_DESK - dq)
        assert np.allclose(J[:3, i], (plus.t - minus.t) / (2 * h), atol=1e-6)
        w = Rotation.from_matrix(plus.R @ base.R.T).as_rotvec() / h
        assert np.allclose(J[3:, i], w, atol=1e-5)


def test_ik_round_trip(desk_chain):
    """Test that IK from a nearby start reaches fk of a known configuration."""
    target = KinematicsService.fk(desk_chain, Q_DESK)
    q = KinematicsService.ik(desk_chain, target, Q_DESK + 0.1)
    assert se3_distance(KinematicsService.fk(desk_chain, q), target) < 1e-4


def test_ik_success_rate_on_reachable_targets(desk_chain):
    """Test that IK from a perturbed start reaches at least 95 of 100 random reachable poses."""
    rng = np.random.default_rng(11)
    lower, upper = 0.8 * desk_chain.lower, 0.8 * desk_chain.upper
    successes = 0
    for _ in range(100):
        q_true = rng.uniform(lower, upper)
        target = KinematicsService.fk(desk_chain, q_true)
        q0 = q_true + rng.uniform(-0.2, 0.2, size=desk_chain.dof)
        try:
            q = KinematicsService.ik(desk_chain, target, q0)
        except IKError:
            continue
        if se3_distance(KinematicsService.fk(desk_chain, q), target) < 1e-4:
            successes += 1
    assert successes >= 95


def test_ik_returns_start_when_already_there(desk_chain):
    """Test that a start at the target is returned unchanged."""
    q = KinematicsService.ik(desk_chain, KinematicsService.fk(desk_chain, Q_DESK), Q_DESK)
    assert np.allclose(q.q, Q_DESK)


def test_ik_beyond_reach(desk_chain):
    """Test that a target outside the reach raises IKError with the best configuration."""
    target = Transform3.from_translation([2.0, 0.0, 0.0])
    with pytest.raises(IKError) as info:
        KinematicsService.ik(desk_chain, target, np.zeros(6))
    assert info.value.q_best is not None
    assert info.value.residual > 1.0
    assert info.value.exit_code == 5


def test_object_pose_is_inverse_of_grasp(desk_chain):
    """Test object_pose = (fk(q) H)^-1."""
    pose = KinematicsService.object_pose(desk_chain, Q_DESK, H)
    expected = np.linalg.inv(KinematicsService.fk(desk_chain, Q_DESK).matrix @ H.matrix)
    assert np.allclose(pose.matrix, expected)


def test_psi_maps_points_of_interest(desk_chain):
    """Test that psi moves object points with the object pose."""
    poi = PointsOfInterest(np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0]]))
    out = KinematicsService.psi(desk_chain, Q_DESK, H, poi)
    pose = KinematicsService.object_pose(desk_chain, Q_DESK, H)
    assert out.shape == (2, 3)
    assert np.allclose(out[0], pose.t)
    assert np.linalg.norm(out[1] - out[0]) == pytest.approx(0.1)


def test_psi_inverse_round_trip(desk_chain):
    """Test that psi_inverse reaches a pose the object actually had."""
    request = KinematicsService.object_pose(desk_chain, Q_DESK, H)
    q = KinematicsService.psi_inverse(desk_chain, request, H, Q_DESK + 0.1)
    assert se3_distance(KinematicsService.object_pose(desk_chain, q, H), request) < 1e-3


def test_psi_inverse_points(desk_chain):
    """Test the point request variant of psi_inverse."""
    poi = PointsOfInterest(np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.0, 0.05, 0.02]]))
    targets = KinematicsService.psi(desk_chain, Q_DESK, H, poi)
    q = KinematicsService.psi_inverse_points(desk_chain, poi, targets, H, Q_DESK + 0.1)
    assert np.allclose(KinematicsService.psi(desk_chain, q, H, poi), targets, atol=1e-3)


def test_psi_inverse_points_needs_three(desk_chain):
    """Test that fewer than 3 points cannot fix the orientation."""
    poi = PointsOfInterest(np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0]]))
    with pytest.raises(InputError):
        KinematicsService.psi_inverse_points(desk_chain, poi, poi.points, H, Q_DESK)


def test_pivot_goal_keeps_pivot_fixed():
    """Test that the pivot's base position does not move and the rotation has the given angle."""
    pose = Transform3(Rotation3.about_axis([1.0, 1.0, 0.0], 0.4), np.array([0.3, -0.1, 0.5]))
    pivot = np.array([0.05, 0.02, -0.01])
    goal = KinematicsService.pivot_goal(pose, pivot, [0.0, 0.0, 1.0], np.deg2rad(30.0))
    assert np.allclose(apply_points(pivot, goal), apply_points(pivot, pose))
    assert np.degrees(geodesic_angle(goal.R, pose.R)) == pytest.approx(30.0)


def test_pivot_goal_rejects_non_unit_axis():
    """Test that the axis must be normalized."""
    with pytest.raises(InputError):
        KinematicsService.pivot_goal(Transform3.identity(), np.zeros(3), [0.0, 0.0, 2.0], 0.1)


def test_builtin_chains():
    """Test the built-in chain lookup."""
    assert KinematicsService.builtin("planar2").dof == 2
    assert KinematicsService.builtin("desk6r").reach() == pytest.approx(1.08)
    with pytest.raises(InputError):
        KinematicsService.builtin("ur5")


def _pour(scenario, degrees):
    chain, H_true = scenario.chain, scenario.H_true
    q0 = scenario.train_configs[0]
    spout = PointsOfInterest(scenario.points_of_interest[:1])
    pose = KinematicsService.object_pose(chain, q0, H_true)
    goal = KinematicsService.pivot_goal(pose, spout.points[0], [0.0, 1.0, 0.0], np.deg2rad(degrees))
    q = KinematicsService.psi_inverse(chain, goal, H_true, q0, IKOptions(max_iters=1000))
    before = KinematicsService.psi(chain, q0, H_true, spout)[0]
    after = KinematicsService.psi(chain, q, H_true, spout)[0]
    return float(np.linalg.norm(after - before))


def test_small_pour_keeps_spout_in_place(teapot):
    """Test a 10 degree tilt about the spout with the true grasp."""
    assert _pour(teapot, 10.0) < 2e-3


@pytest.mark.slow
def test_pour_keeps_spout_in_place(teapot):
    """Test a 45 degree tilt about the spout with the true grasp."""
    assert _pour(teapot, 45.0) < 2e-3
