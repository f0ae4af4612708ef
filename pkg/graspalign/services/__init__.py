"""
Services package initialization.

This module imports all services to make them available from a single import point.
"""

from graspalign.services.pointmap_align import PointmapAlignmentService
from graspalign.services.ope import ObjectPoseService
from graspalign.services.coord_align import CoordinateAlignmentService
from graspalign.services.kinematics import KinematicsService
from graspalign.services.evaluation import EvaluationService
from graspalign.services.baselines import BaselineService
from graspalign.services.dataset import DatasetService
from graspalign.services.simulation import SimulationService
from graspalign.services.experiments import ExperimentService

__all__ = [
    "PointmapAlignmentService",
    "ObjectPoseService",
    "CoordinateAlignmentService",
    "KinematicsService",
    "EvaluationService",
    "BaselineService",
    "DatasetService",
    "SimulationService",
    "ExperimentService",
]
