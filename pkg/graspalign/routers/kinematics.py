"""
Kinematics API endpoints.
This module exposes forward kinematics and the configuration/object-point mappings.
"""
import numpy as np
from fastapi import APIRouter

from graspalign.core.errors import IKError
from graspalign.core.logging import logger
from graspalign.models.geometry import Transform3
from graspalign.models.kinematics import PointsOfInterest
from graspalign.routers.errors import http_error
from graspalign.schemas.kinematics import (
    ConfigurationResponse,
    FKRequest,
    PivotGoalRequest,
    PointsResponse,
    PsiInverseRequest,
    PsiRequest,
    TransformResponse,
)
from graspalign.services.kinematics import KinematicsService
from graspalign.services.se3 import se3_distance

router = APIRouter()


@router.post("/fk", response_model=TransformResponse)
def fk(request: FKRequest) -> TransformResponse:
    """
    Forward kinematics.

    Args:
        request: Chain and joint vector

    Returns:
        Tip pose in the base frame
    """
    try:
        pose = KinematicsService.fk(request.chain.to_chain(), request.q)
    except ValueError as e:
        raise http_error("Forward kinematics", e)
    return TransformResponse(**pose.to_json())


@router.post("/psi", response_model=PointsResponse)
def psi(request: PsiRequest) -> PointsResponse:
    """
    Base-frame coordinates of object points at a configuration.

    Args:
        request: Chain, configuration, H and points (object frame)

    Returns:
        Points in the base frame
    """
    try:
        points = KinematicsService.psi(
            request.chain.to_chain(), request.q, Transform3.from_json(request.H),
            PointsOfInterest(np.asarray(request.points)),
        )
    except ValueError as e:
        raise http_error("psi", e)
    return PointsResponse(points=[tuple(p) for p in np.atleast_2d(points).tolist()])


@router.post("/psi-inverse", response_model=ConfigurationResponse)
def psi_inverse(request: PsiInverseRequest) -> ConfigurationResponse:
    """
    Configuration that places the held object as requested.

    Args:
        request: Chain, H, start configuration and either an object pose or point targets

    Returns:
        Joint vector and its final pose residual
    """
    logger.info("Configuration requested for an object target")
    try:
        chain = request.chain.to_chain()
        H = Transform3.from_json(request.H)
        if request.object_pose is not None:
            target = Transform3.from_json(request.object_pose)
            q = KinematicsService.psi_inverse(chain, target, H, request.q0, request.options)
        else:
            poi = PointsOfInterest(np.asarray(request.points))
            q = KinematicsService.psi_inverse_points(
                chain, poi, np.asarray(request.target_points), H, request.q0, request.options
            )
            target = None
        reached = KinematicsService.object_pose(chain, q, H)
        residual = 0.0 if target is None else se3_distance(reached, target, 1.0)
    except IKError as e:
        raise http_error(f"Inverse kinematics (residual {e.residual:.3g})", e)
    except ValueError as e:
        raise http_error("Inverse kinematics", e)
    return ConfigurationResponse(q=q.q.tolist(), residual=float(residual))


@router.post("/pivot-goal", response_model=TransformResponse)
def pivot_goal(request: PivotGoalRequest) -> TransformResponse:
    """
    Rotate an object pose about a line through a point on the object.

    Args:
        request: Current object pose, pivot (object frame), axis (base frame) and angle in degrees

    Returns:
        New object pose
    """
    try:
        goal = KinematicsService.pivot_goal(
            Transform3.from_json(request.object_pose), request.pivot, request.axis, np.deg2rad(request.angle_deg)
        )
    except ValueError as e:
        raise http_error("Pivot goal", e)
    return TransformResponse(**goal.to_json())
