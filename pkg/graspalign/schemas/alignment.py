"""
Pydantic schemas for the alignment endpoints.

Problems travel inline over HTTP: the dense cloud is a list of points instead
of a PLY path.
"""

from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field

from graspalign.core.config import CoordAlignOptions
from graspalign.models.alignment import AlignmentProblem, CameraObjectPose
from graspalign.models.geometry import DenseCloud, Intrinsics, Transform3
from graspalign.schemas.files import IntrinsicsSchema, Matrix16, Point3


class ProblemPayload(BaseModel):
    """Schema for an alignment problem with the dense points inline."""

    ee_poses: List[Matrix16] = Field(min_length=2)
    cam_obj_poses: List[Matrix16] = Field(min_length=2)
    dense: List[Point3] = Field(min_length=1)
    confidence: Optional[List[float]] = None
    intrinsics: IntrinsicsSchema = Field(default_factory=IntrinsicsSchema)
    render_subsample: int = Field(default=1, ge=1)

    def to_problem(self) -> AlignmentProblem:
        return AlignmentProblem(
            ee_poses=[Transform3.from_json(m) for m in self.ee_poses],
            cam_obj_poses=[CameraObjectPose.from_transform(Transform3.from_json(m)) for m in self.cam_obj_poses],
            dense=DenseCloud(np.asarray(self.dense), self.confidence),
            intrinsics=Intrinsics(**self.intrinsics.model_dump()),
            render_subsample=self.render_subsample,
        )


class SolveRequest(BaseModel):
    """Schema for a solve request."""

    problem: ProblemPayload
    method: Literal["rendered", "no-render"] = "rendered"
    options: CoordAlignOptions = Field(default_factory=CoordAlignOptions)


class SolveResponse(BaseModel):
    """Schema for solve response data."""

    H: Matrix16
    alpha: float
    final_loss_px: float
    residuals_px: List[float]
    cam_base: Matrix16
    cam_base_spread: float
    method: str
    start_losses: List[float]
    iterations: int
    converged: bool


class LossRequest(BaseModel):
    """Schema for evaluating the rendered loss at a fixed (H, alpha)."""

    problem: ProblemPayload
    H: Matrix16
    alpha: float = Field(gt=0)
    mean: Literal["matrix", "log"] = "matrix"


class LossResponse(BaseModel):
    """Schema for loss response data."""

    loss_px: float
    residuals_px: List[float]
