"""
Models package initialization.

This module imports all domain value types to make them available from a single import point.
"""

from graspalign.models.geometry import DenseCloud, Intrinsics, PixelSet, Rotation3, Transform3
from graspalign.models.pointmap import (
    ConfidenceMap,
    GlobalAlignmentResult,
    GlobalAlignmentVariables,
    PairPrediction,
    Pointmap,
)
from graspalign.models.alignment import AlignmentProblem, AlignmentSolution, CameraObjectPose
from graspalign.models.kinematics import ChainSpec, Configuration, JointSpec, PointsOfInterest
from graspalign.models.scenario import GroundTruth, NoiseSpec, Scenario, ScenarioOutputs

__all__ = [
    "DenseCloud", "Intrinsics", "PixelSet", "Rotation3", "Transform3",
    "ConfidenceMap", "GlobalAlignmentResult", "GlobalAlignmentVariables", "PairPrediction", "Pointmap",
    "AlignmentProblem", "AlignmentSolution", "CameraObjectPose",
    "ChainSpec", "Configuration", "JointSpec", "PointsOfInterest",
    "GroundTruth", "NoiseSpec", "Scenario", "ScenarioOutputs",
]
