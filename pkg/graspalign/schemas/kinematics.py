"""
Pydantic schemas for the kinematics endpoints.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

from graspalign.core.config import IKOptions
from graspalign.models.kinematics import ChainSpec
from graspalign.schemas.files import Matrix16, Point3


class ChainPayload(BaseModel):
    """Schema naming a built-in chain or carrying a full chain description."""

    builtin: Optional[str] = None
    spec: Optional[Dict[str, Any]] = None

    @model_validator(mode="after")
    def check_one(self):
        if (self.builtin is None) == (self.spec is None):
            raise ValueError("give exactly one of 'builtin' and 'spec'")
        return self

    def to_chain(self) -> ChainSpec:
        from graspalign.services.kinematics import KinematicsService

        if self.builtin is not None:
            return KinematicsService.builtin(self.builtin)
        return ChainSpec.from_json(self.spec)


class FKRequest(BaseModel):
    """Schema for a forward-kinematics request."""

    chain: ChainPayload
    q: List[float]


class TransformResponse(BaseModel):
    """Schema for a single transform, row-major."""

    matrix: Matrix16


class PsiRequest(BaseModel):
    """Schema for mapping a configuration to base-frame object points."""

    chain: ChainPayload
    q: List[float]
    H: Matrix16
    points: List[Point3] = Field(min_length=1)


class PointsResponse(BaseModel):
    """Schema for base-frame points."""

    points: List[Point3]


class PsiInverseRequest(BaseModel):
    """Schema for a configuration request.

    Give either object_pose (object pose in the base frame) or points together
    with target_points.
    """

    chain: ChainPayload
    H: Matrix16
    q0: List[float]
    object_pose: Optional[Matrix16] = None
    points: Optional[List[Point3]] = None
    target_points: Optional[List[Point3]] = None
    options: IKOptions = Field(default_factory=IKOptions)

    @model_validator(mode="after")
    def check_request(self):
        by_points = self.points is not None and self.target_points is not None
        if (self.object_pose is None) == (not by_points):
            raise ValueError("give either 'object_pose' or both 'points' and 'target_points'")
        return self


class ConfigurationResponse(BaseModel):
    """Schema for a joint configuration and its pose residual."""

    q: List[float]
    residual: float


class PivotGoalRequest(BaseModel):
    """Schema for rotating an object pose about a pivot line."""

    object_pose: Matrix16
    pivot: Point3
    axis: Point3
    angle_deg: float
