"""
Tests for the HTTP endpoints.
"""

import numpy as np
from fastapi import status

from graspalign.models.geometry import Transform3
from graspalign.services.kinematics import KinematicsService

IDENTITY = Transform3.identity().to_json()["matrix"]
Q_DESK = [0.3, 0.4, -0.8, 0.2, 0.5, -0.3]


def problem_payload(generated):
    """Inline JSON for a generated alignment problem."""
    problem = generated.problem
    return {
        "ee_poses": [p.to_json()["matrix"] for p in problem.ee_poses],
        "cam_obj_poses": [p.as_transform().to_json()["matrix"] for p in problem.cam_obj_poses],
        "dense": problem.dense.points.tolist(),
        "intrinsics": problem.intrinsics.to_json(),
        "render_subsample": problem.render_subsample,
    }


def test_root(client):
    """Test the root endpoint."""
    response = client.get("/")
    assert response.status_code == status.HTTP_200_OK
    assert response.json()["docs"] == "/docs"
    assert "version" in response.json()


def test_health_check(client):
    """Test the health check endpoint."""
    response = client.get("/api/health/")
    assert response.status_code == status.HTTP_200_OK
    assert response.json() == {"status": "ok"}
    assert "X-Process-Time" in response.headers


def test_version(client):
    """Test the version endpoint."""
    response = client.get("/api/health/version")
    assert response.status_code == status.HTTP_200_OK
    assert set(response.json()) == {"version", "torch", "threads"}


def test_distance(client):
    """Test the symmetrized distance on the two-set witness."""
    body = {"A": [[0, 0], [10, 0]], "B": [[0, 0]]}
    response = client.post("/api/evaluation/distance", json=body)
    assert response.status_code == status.HTTP_200_OK
    assert response.json() == {"D_AB": 5.0, "D_BA": 0.0, "D_hat": 2.5}


def test_distance_rejects_empty_set(client):
    """Test that an empty pixel set is a validation error."""
    response = client.post("/api/evaluation/distance", json={"A": [], "B": [[0, 0]]})
    assert response.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY


def test_forward_kinematics(client):
    """Test forward kinematics of the planar arm."""
    response = client.post("/api/kinematics/fk", json={"chain": {"builtin": "planar2"}, "q": [0.0, np.pi / 2]})
    assert response.status_code == status.HTTP_200_OK
    matrix = np.asarray(response.json()["matrix"]).reshape(4, 4)
    assert np.allclose(matrix[:3, 3], [1.0, 1.0, 0.0])


def test_unknown_chain(client):
    """Test that an unknown built-in chain is rejected."""
    response = client.post("/api/kinematics/fk", json={"chain": {"builtin": "scara"}, "q": [0.0]})
    assert response.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY
    assert "unknown chain" in response.json()["detail"]


def test_chain_needs_exactly_one_source(client):
    """Test the chain payload check."""
    response = client.post("/api/kinematics/fk", json={"chain": {}, "q": [0.0, 0.0]})
    assert response.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY


def test_psi_maps_points_to_base(client):
    """Test that psi applies fk and H to object points."""
    body = {"chain": {"builtin": "planar2"}, "q": [0.0, 0.0], "H": IDENTITY, "points": [[0.0, 0.5, 0.0]]}
    response = client.post("/api/kinematics/psi", json=body)
    assert response.status_code == status.HTTP_200_OK
    assert np.allclose(response.json()["points"], [[-2.0, 0.5, 0.0]])


def test_psi_inverse_reaches_object_pose(client, desk_chain):
    """Test the configuration request for an object pose."""
    target = KinematicsService.fk(desk_chain, Q_DESK)
    body = {
        "chain": {"builtin": "desk6r"},
        "H": IDENTITY,
        "q0": [q + 0.1 for q in Q_DESK],
        "object_pose": target.to_json()["matrix"],
    }
    response = client.post("/api/kinematics/psi-inverse", json=body)
    assert response.status_code == status.HTTP_200_OK
    assert len(response.json()["q"]) == 6
    assert response.json()["residual"] < 1e-3


def test_psi_inverse_needs_one_target(client):
    """Test that a configuration request needs exactly one kind of target."""
    body = {"chain": {"builtin": "desk6r"}, "H": IDENTITY, "q0": Q_DESK}
    response = client.post("/api/kinematics/psi-inverse", json=body)
    assert response.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY


def test_pivot_goal_keeps_pivot(client):
    """Test that the pivot point stays in place."""
    body = {"object_pose": IDENTITY, "pivot": [0.1, 0.0, 0.0], "axis": [0.0, 0.0, 1.0], "angle_deg": 90.0}
    response = client.post("/api/kinematics/pivot-goal", json=body)
    assert response.status_code == status.HTTP_200_OK
    goal = Transform3.from_json(response.json())
    assert np.allclose(goal.R @ [0.1, 0.0, 0.0] + goal.t, [0.1, 0.0, 0.0])


def test_pivot_goal_bad_pose(client):
    """Test that a short pose matrix is rejected."""
    body = {"object_pose": [1.0, 0.0], "pivot": [0.0, 0.0, 0.0], "axis": [0.0, 0.0, 1.0], "angle_deg": 10.0}
    response = client.post("/api/kinematics/pivot-goal", json=body)
    assert response.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY


def test_loss_at_truth(client, noiseless):
    """Test the rendered loss at the true grasp and scale."""
    body = {
        "problem": problem_payload(noiseless),
        "H": noiseless.truth.H_true.to_json()["matrix"],
        "alpha": noiseless.truth.alpha_true,
    }
    response = client.post("/api/alignment/loss", json=body)
    assert response.status_code == status.HTTP_200_OK
    assert response.json()["loss_px"] < 1e-6
    assert len(response.json()["residuals_px"]) == noiseless.problem.n_poses


def test_loss_rejects_nonpositive_alpha(client, noiseless):
    """Test the alpha constraint on loss requests."""
    body = {"problem": problem_payload(noiseless), "H": IDENTITY, "alpha": 0.0}
    response = client.post("/api/alignment/loss", json=body)
    assert response.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY


def test_solve_zero_budget(client, three_image):
    """Test that a zero iteration budget returns the initial solution."""
    body = {
        "problem": problem_payload(three_image),
        "options": {"max_iters": 0, "n_starts": 1, "polish": False, "divergence_px": 1e12},
    }
    response = client.post("/api/alignment/solve", json=body)
    assert response.status_code == status.HTTP_200_OK
    data = response.json()
    assert data["method"] == "rendered"
    assert data["iterations"] == 0
    assert data["converged"] is False
    assert len(data["H"]) == 16
    assert data["alpha"] > 0
