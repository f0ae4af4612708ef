"""
Schemas package initialization.

This module imports all schemas to make them available from a single import point.
"""

from graspalign.schemas.files import (
    EvaluationSetFile,
    IntrinsicsSchema,
    ManifestFile,
    NoiseSchema,
    ObjectSpec,
    PairEntry,
    ProblemFile,
    ScenarioSpec,
    SolutionFile,
)
from graspalign.schemas.run_config import RunConfig
from graspalign.schemas.alignment import (
    LossRequest,
    LossResponse,
    ProblemPayload,
    SolveRequest,
    SolveResponse,
)
from graspalign.schemas.kinematics import (
    ChainPayload,
    ConfigurationResponse,
    FKRequest,
    PivotGoalRequest,
    PointsResponse,
    PsiInverseRequest,
    PsiRequest,
    TransformResponse,
)
from graspalign.schemas.evaluation import DistanceRequest, DistanceResponse

__all__ = [
    "EvaluationSetFile", "IntrinsicsSchema", "ManifestFile", "NoiseSchema", "ObjectSpec", "PairEntry",
    "ProblemFile", "ScenarioSpec", "SolutionFile", "RunConfig",
    "LossRequest", "LossResponse", "ProblemPayload", "SolveRequest", "SolveResponse",
    "ChainPayload", "ConfigurationResponse", "FKRequest", "PivotGoalRequest", "PointsResponse",
    "PsiInverseRequest", "PsiRequest", "TransformResponse",
    "DistanceRequest", "DistanceResponse",
]
