"""
Tests for rigid-transform algebra.
"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from graspalign.core.errors import InputError, NotProjectableError
from graspalign.models.geometry import DenseCloud, Rotation3, Transform3
from graspalign.services.se3 import (
    apply_points,
    compose,
    compose_all,
    from_rotvec,
    geodesic_angle,
    mean_transform,
    procrustes_project,
    random_transform,
    se3_distance,
    to_rotvec,
    umeyama,
)


def test_compose_with_inverse_is_identity(rng):
    """Test that T T^-1 is the identity."""
    T = random_transform(rng)
    out = compose(T, T.inverse())
    assert np.allclose(out.matrix, np.eye(4), atol=1e-12)


def test_compose_matches_matrix_product(rng):
    """Test compose against the 4x4 product."""
    a, b = random_transform(rng), random_transform(rng)
    assert np.allclose(compose(a, b).matrix, a.matrix @ b.matrix, atol=1e-12)


def test_compose_all_is_associative(rng):
    """Test compose_all over three transforms."""
    ts = [random_transform(rng) for _ in range(3)]
    expected = ts[0].matrix @ ts[1].matrix @ ts[2].matrix
    assert np.allclose(compose_all(ts).matrix, expected, atol=1e-12)


def test_apply_points_carries_confidence(rng):
    """Test that transforming a DenseCloud keeps its confidence."""
    T = random_transform(rng)
    cloud = DenseCloud(rng.normal(size=(10, 3)), np.arange(10.0))
    out = apply_points(cloud, T)
    assert np.allclose(out.points, cloud.points @ T.R.T + T.t)
    assert np.array_equal(out.confidence, cloud.confidence)


def test_apply_points_single_point():
    """Test that a single 3-vector comes back as a 3-vector."""
    T = Transform3.from_translation([1.0, 2.0, 3.0])
    assert np.allclose(apply_points(np.zeros(3), T), [1.0, 2.0, 3.0])


def test_procrustes_of_rotation_is_itself(rng):
    """Test that projecting a rotation returns it unchanged."""
    R = Rotation.random(random_state=rng).as_matrix()
    assert np.allclose(procrustes_project(R).m, R, atol=1e-12)


def test_procrustes_fixes_reflection():
    """Test that a reflection is projected to a proper rotation."""
    out = procrustes_project(np.diag([1.0, 1.0, -1.0])).m
    assert np.isclose(np.linalg.det(out), 1.0)


def test_procrustes_rejects_rank_one():
    """Test that a rank-1 matrix cannot be projected."""
    with pytest.raises(NotProjectableError):
        procrustes_project(np.outer([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]))


def test_geodesic_angle_about_axis():
    """Test the geodesic angle of a known rotation."""
    R = Rotation3.about_axis([0.0, 0.0, 1.0], 0.3).m
    assert geodesic_angle(np.eye(3), R) == pytest.approx(0.3)


def test_geodesic_angle_precision_at_small_angles(rng):
    """Test that tiny angles are resolved and a pose is at distance ~0 from itself."""
    R = Rotation3.about_axis([0.0, 1.0, 0.0], 1e-9).m
    assert geodesic_angle(np.eye(3), R) == pytest.approx(1e-9, rel=1e-6)
    for _ in range(10):
        T = random_transform(rng)
        assert se3_distance(T, T) < 1e-14
    assert geodesic_angle(np.eye(3), np.diag([1.0, -1.0, -1.0])) == pytest.approx(np.pi)


def test_se3_distance_weights_rotation():
    """Test that rot_weight scales the angular term."""
    a = Transform3.identity()
    b = Transform3(Rotation3.about_axis([1.0, 0.0, 0.0], 0.5), [0.0, 0.3, 0.4])
    assert se3_distance(a, b, 1.0) == pytest.approx(1.0)
    assert se3_distance(a, b, 2.0) == pytest.approx(1.5)
    with pytest.raises(InputError):
        se3_distance(a, b, 0.0)


def test_mean_transform_of_identical_members(rng):
    """Test that averaging copies returns the member with zero spread."""
    T = random_transform(rng)
    mean, spread = mean_transform([T, T, T])
    assert np.allclose(mean.matrix, T.matrix, atol=1e-12)
    assert spread == pytest.approx(0.0, abs=1e-6)


def test_mean_transform_empty():
    """Test that an empty list is rejected."""
    with pytest.raises(InputError):
        mean_transform([])


def test_rotvec_round_trip():
    """Test from_rotvec and to_rotvec on a small rotation."""
    w = np.array([0.1, -0.2, 0.3])
    assert np.allclose(to_rotvec(from_rotvec(w).rotation), w)


def test_umeyama_recovers_similarity(rng):
    """Test the similarity fit on exact correspondences."""
    src = rng.normal(size=(50, 3))
    R = Rotation.random(random_state=rng).as_matrix()
    t = np.array([0.5, -1.0, 2.0])
    dst = 1.7 * src @ R.T + t
    c, r, tt = umeyama(src, dst)
    assert c == pytest.approx(1.7)
    assert np.allclose(r, R, atol=1e-9)
    assert np.allclose(tt, t, atol=1e-9)


def test_umeyama_without_scale(rng):
    """Test that with_scale=False fits a rigid transform."""
    src = rng.normal(size=(20, 3))
    R = Rotation.random(random_state=rng).as_matrix()
    c, r, _ = umeyama(src, src @ R.T, with_scale=False)
    assert c == 1.0
    assert np.allclose(r, R, atol=1e-9)
