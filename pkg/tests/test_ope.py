"""
Tests for the object-pose reinterpretation.
"""

import numpy as np
import pytest

from graspalign.core.errors import InputError
from graspalign.models.alignment import CameraObjectPose
from graspalign.models.geometry import DenseCloud, Rotation3, Transform3
from graspalign.models.pointmap import GlobalAlignmentResult
from graspalign.services.ope import ObjectPoseService
from graspalign.services.se3 import random_transform
from graspalign.utils.formats import read_ply


@pytest.fixture
def result(rng):
    """Alignment result with three random camera poses."""
    return GlobalAlignmentResult(
        dense=DenseCloud(rng.normal(size=(20, 3)), np.full(20, 3.0)),
        camera_poses=[Transform3.identity()] + [random_transform(rng) for _ in range(2)],
        final_loss=0.0,
    )


def test_reinterpret_inverts_camera_poses(result):
    """Test that each pose is the inverse of its camera pose and each cloud is moved by it."""
    clouds = ObjectPoseService.reinterpret(result)
    assert len(clouds) == 3
    for n in range(3):
        pose, cloud = clouds[n]
        inv = result.camera_poses[n].inverse()
        assert np.allclose(pose.R, inv.R)
        assert np.allclose(pose.t, inv.t)
        assert np.allclose(cloud.points, result.dense.points @ inv.R.T + inv.t)
        assert np.array_equal(cloud.confidence, result.dense.confidence)


def test_reinterpret_supports_slices(result):
    """Test that slicing returns a list of pose and cloud tuples."""
    clouds = ObjectPoseService.reinterpret(result)
    assert len(clouds[1:]) == 2
    assert len(clouds.poses()) == 3


def test_reinterpret_needs_camera_poses():
    """Test that a result without camera poses is rejected."""
    empty = GlobalAlignmentResult(DenseCloud(np.zeros((1, 3))), [], 0.0)
    with pytest.raises(InputError):
        ObjectPoseService.reinterpret(empty)


def test_scaled_pose_multiplies_translation_only():
    """Test that alpha scales the translation and keeps the rotation."""
    rot = Rotation3.about_axis([0.0, 0.0, 1.0], 0.2)
    pose = CameraObjectPose(rot, np.array([0.1, 0.2, 0.3]))
    out = ObjectPoseService.scaled_pose(pose, 2.5)
    assert np.allclose(out.R, rot.m)
    assert np.allclose(out.t, [0.25, 0.5, 0.75])
    with pytest.raises(InputError):
        ObjectPoseService.scaled_pose(pose, 0.0)


def test_build_problem_pairs_poses(result, intrinsics, rng):
    """Test that the problem keeps end-effector order and the dense cloud."""
    ee = [random_transform(rng) for _ in range(3)]
    problem = ObjectPoseService.build_problem(result, ee, intrinsics, render_subsample=4)
    assert problem.n_poses == 3
    assert problem.render_subsample == 4
    assert np.allclose(problem.ee_poses[2].matrix, ee[2].matrix)
    assert np.allclose(problem.cam_obj_poses[1].R, result.camera_poses[1].inverse().R)


def test_build_problem_count_mismatch(result, intrinsics):
    """Test that a missing end-effector pose is rejected."""
    with pytest.raises(InputError):
        ObjectPoseService.build_problem(result, [Transform3.identity()] * 2, intrinsics)


def test_export_ply_writes_one_file_per_pose(result, tmp_path):
    """Test the per-pose PLY export."""
    paths = ObjectPoseService.export_ply(ObjectPoseService.reinterpret(result), tmp_path)
    assert [p.name for p in paths] == ["pose_000.ply", "pose_001.ply", "pose_002.ply"]
    assert len(read_ply(paths[1])) == 20
