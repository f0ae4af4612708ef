"""
Tests for the synthetic scenario generator.
"""

import numpy as np
import pytest

from graspalign.core.errors import InputError, VisibilityError
from graspalign.models.geometry import Transform3
from graspalign.schemas.files import NoiseSchema, ObjectSpec, ScenarioSpec
from graspalign.services.kinematics import KinematicsService
from graspalign.services.se3 import apply_points, compose, se3_distance
from graspalign.services.simulation import SimulationService, keypoints
from graspalign.utils.serialization import read_json


def test_block_points_lie_on_faces():
    """Test that every block sample sits on a face of the box."""
    size = np.array([0.1, 0.06, 0.04])
    pts = SimulationService.make_object("block", {"size": size.tolist()}, 2000, seed=1).points
    rel = np.abs(pts) / (size / 2)
    assert np.all(rel <= 1.0 + 1e-12)
    assert np.allclose(rel.max(axis=1), 1.0)


def test_tape_points_lie_on_torus():
    """Test the ring distance and height bounds of the torus samples."""
    pts = SimulationService.make_object("tape", {"R": 0.05, "r": 0.01}, 2000, seed=1).points
    ring = np.linalg.norm(pts[:, :2], axis=1)
    assert np.all(ring >= 0.04 - 1e-12)
    assert np.all(ring <= 0.06 + 1e-12)
    assert np.all(np.abs(pts[:, 2]) <= 0.01 + 1e-12)


@pytest.mark.parametrize("kind", ["hammer", "block", "tape", "teapot", "screwdriver", "wrench", "brush"])
def test_objects_are_seeded(kind):
    """Test that each kind gives the requested count and repeats under a seed."""
    a = SimulationService.make_object(kind, None, 2500, seed=4).points
    b = SimulationService.make_object(kind, None, 2500, seed=4).points
    c = SimulationService.make_object(kind, None, 2500, seed=5).points
    assert a.shape == (2500, 3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_object_parameter_checks():
    """Test the point-count and shape-parameter checks."""
    with pytest.raises(InputError):
        SimulationService.make_object("block", None, 100)
    with pytest.raises(InputError):
        SimulationService.make_object("spoon")
    with pytest.raises(InputError):
        SimulationService.make_object("block", {"edge": 0.1})
    with pytest.raises(InputError):
        SimulationService.make_object("tape", {"R": 0.01, "r": 0.02})
    with pytest.raises(InputError):
        SimulationService.make_object("custom", {})


def test_custom_object_keeps_points():
    """Test that a custom object is taken as given."""
    pts = [[0.0, 0.0, 0.0], [0.01, 0.0, 0.0]]
    assert np.array_equal(SimulationService.make_object("custom", {"points": pts}).points, pts)


def test_keypoints():
    """Test the designated points per object kind."""
    assert keypoints("teapot").shape == (1, 3)
    assert keypoints("block") is None
    assert keypoints("custom") is None


def test_confidence_values():
    """Test that exact points get confidence 3 and noise lowers it."""
    assert SimulationService.confidence(0.0) == 3.0
    assert 1.0 < SimulationService.confidence(0.01) < SimulationService.confidence(0.001) < 3.0


def test_pair_layouts():
    """Test the all-pairs and ring layouts."""
    assert len(SimulationService.pair_layout(3, "all")) == 6
    assert SimulationService.pair_layout(3, "ring") == [(0, 1), (1, 2), (2, 0)]
    with pytest.raises(InputError):
        SimulationService.pair_layout(3, "star")


def test_raster_hits_keep_nearest(intrinsics):
    """Test that the z-buffer keeps the nearest point of a cell."""
    pts = np.array([[0.0, 0.0, 2.0], [0.0, 0.0, 1.0], [5.0, 0.0, 1.0]])
    hits = SimulationService.raster_hits(pts, intrinsics, (24, 32), 20)
    assert hits[12, 16] == 1
    assert np.count_nonzero(hits >= 0) == 1


def test_camera_base_is_stationary(noiseless):
    """Test that E_n H C_n is the same camera-base transform for every training pose."""
    scn, truth = noiseless.scenario, noiseless.truth
    for q, pose in zip(scn.train_configs, truth.train_cam_obj):
        G = compose(compose(KinematicsService.fk(scn.chain, q), truth.H_true), pose)
        assert se3_distance(G, truth.cam_base_true) < 1e-6


def test_problem_is_in_gauge_units(noiseless):
    """Test that the dense cloud and translations are divided by alpha."""
    scn, truth, problem = noiseless.scenario, noiseless.truth, noiseless.problem
    assert truth.alpha_true == 2.5
    assert np.allclose(problem.dense.points * 2.5, scn.object_cloud.points)
    assert np.allclose(problem.cam_obj_poses[0].t * 2.5, truth.train_cam_obj[0].t)
    assert np.all(problem.dense.confidence == 3.0)


def test_anchor_pair_is_unscaled(noiseless):
    """Test that the first pair holds camera-0 points divided by alpha."""
    pred = noiseless.predictions[0]
    mask = noiseless.truth.image_masks[0]
    cam = apply_points(noiseless.scenario.object_cloud.points, noiseless.truth.train_cam_obj[0]) / 2.5
    pts = pred.x_nn.coords[mask]
    assert (pred.n, pred.m) == (0, 1)
    assert np.all(pred.c_nn.values[mask] == 3.0)
    assert np.all(pred.c_nn.values[~mask] == 1.0)
    dist = np.linalg.norm(pts[:, None, :] - cam[None, :, :], axis=-1).min(axis=1)
    assert dist.max() < 1e-12


def test_every_test_silhouette_is_set(noiseless):
    """Test that each test pose has a non-empty full-resolution mask."""
    for mask in noiseless.truth.test_masks:
        assert mask.shape == (480, 640)
        assert mask.any()


def test_generate_is_deterministic(block_spec):
    """Test that the same spec generates the same data."""
    spec = block_spec.model_copy(update={"n_train": 2, "n_test": 1, "seed": 9})
    a = SimulationService.generate(SimulationService.make_scenario(spec))
    b = SimulationService.generate(SimulationService.make_scenario(spec))
    assert np.array_equal(a.predictions[1].x_nm.coords, b.predictions[1].x_nm.coords)
    assert np.array_equal(a.problem.ee_poses[1].matrix, b.problem.ee_poses[1].matrix)


def test_noise_perturbs_poses(noisy):
    """Test that pose noise moves the observed poses off the truth."""
    alpha = noisy.truth.alpha_true
    observed = [Transform3(p.rotation, alpha * p.t) for p in noisy.problem.cam_obj_poses]
    assert max(se3_distance(a, b) for a, b in zip(observed, noisy.truth.train_cam_obj)) > 1e-4
    assert np.all(noisy.problem.dense.confidence < 3.0)


def test_distance_scaling_perturbs_far_poses_more(noisy):
    """Test that distance scaling multiplies each pose error by (depth / reference)^2."""
    noise = noisy.scenario.noise
    flat_spec = ScenarioSpec(
        object=ObjectSpec(kind="hammer", n_points=2000), n_train=6, n_test=3, seed=2,
        noise=NoiseSchema(point_sigma=noise.point_sigma, pose_rot_sigma=noise.pose_rot_sigma,
                          pose_trans_sigma=noise.pose_trans_sigma, distance_scaling=False),
    )
    flat = SimulationService.generate(SimulationService.make_scenario(flat_spec))
    alpha = noisy.truth.alpha_true
    centroid = noisy.scenario.object_cloud.points.mean(axis=0)

    depths, gains = [], []
    for n, true_pose in enumerate(noisy.truth.train_cam_obj):
        scaled = noisy.problem.cam_obj_poses[n].t * alpha - true_pose.t
        unscaled = flat.problem.cam_obj_poses[n].t * alpha - true_pose.t
        depth = float(apply_points(centroid, true_pose)[2])
        assert np.allclose(scaled, noise.factor(depth) * unscaled, rtol=1e-9, atol=1e-12)
        depths.append(depth)
        gains.append(np.linalg.norm(scaled) / np.linalg.norm(unscaled))

    far, near = int(np.argmax(depths)), int(np.argmin(depths))
    assert depths[far] > depths[near]
    assert gains[far] > gains[near]


def test_object_that_does_not_fit_is_rejected():
    """Test that a hammer too close to the camera raises VisibilityError."""
    spec = ScenarioSpec(object=ObjectSpec(kind="hammer", n_points=2000), depth=0.11)
    with pytest.raises(VisibilityError):
        SimulationService.make_scenario(spec)


def test_export_writes_every_artifact(three_image, tmp_path):
    """Test the exported file layout."""
    paths = SimulationService.export(three_image, tmp_path)
    assert set(paths) == {"problem", "manifest", "object", "chain", "testset", "ground_truth"}
    for path in paths.values():
        assert path.exists()
    gt = read_json(paths["ground_truth"])
    assert gt["alpha_true"] == 2.5
    assert gt["seed"] == 3
    assert len(list((tmp_path / "pointmaps").glob("*.pmap"))) == 12
