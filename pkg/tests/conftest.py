"""
Configuration for pytest.

This module provides fixtures and configuration for running tests.
"""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from graspalign.core.logging import setup_logging
from graspalign.main import app
from graspalign.models.geometry import Intrinsics
from graspalign.schemas.files import NoiseSchema, ObjectSpec, ScenarioSpec
from graspalign.services.kinematics import KinematicsService
from graspalign.services.simulation import SimulationService

setup_logging("error")


@pytest.fixture
def intrinsics():
    """Default pinhole camera."""
    return Intrinsics(fx=600.0, fy=600.0, cx=320.0, cy=240.0)


@pytest.fixture
def planar_chain():
    """Two-link planar arm with unit links."""
    return KinematicsService.planar2()


@pytest.fixture
def desk_chain():
    """Six-revolute desk arm."""
    return KinematicsService.desk6r()


@pytest.fixture
def rng():
    """Seeded generator for test data."""
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def block_spec():
    """Noiseless block scenario with 5 training and 3 test poses, alpha 2.5."""
    return ScenarioSpec(object=ObjectSpec(kind="block", n_points=2000), n_train=5, n_test=3, alpha_true=2.5, seed=0)


@pytest.fixture(scope="session")
def noiseless(block_spec):
    """Generated outputs of the noiseless block scenario."""
    return SimulationService.generate(SimulationService.make_scenario(block_spec))


@pytest.fixture(scope="session")
def three_image(block_spec):
    """Noiseless three-image scenario with all ordered pairs."""
    spec = block_spec.model_copy(update={"n_train": 3, "n_test": 1, "seed": 3})
    return SimulationService.generate(SimulationService.make_scenario(spec))


@pytest.fixture(scope="session")
def noisy():
    """Hammer scenario with distance-scaled pose and point noise."""
    spec = ScenarioSpec(
        object=ObjectSpec(kind="hammer", n_points=2000),
        n_train=6,
        n_test=3,
        seed=2,
        noise=NoiseSchema(point_sigma=0.001, pose_rot_sigma=0.01, pose_trans_sigma=0.004, distance_scaling=True),
    )
    return SimulationService.generate(SimulationService.make_scenario(spec))


@pytest.fixture(scope="session")
def teapot():
    """Noiseless teapot scenario; its point of interest is the spout tip."""
    spec = ScenarioSpec(object=ObjectSpec(kind="teapot", n_points=2000), n_train=4, n_test=1, seed=5)
    return SimulationService.make_scenario(spec)


@pytest.fixture
def client():
    """Create a test client."""
    with TestClient(app) as c:
        yield c
