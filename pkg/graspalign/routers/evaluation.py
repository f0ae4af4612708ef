"""
Evaluation API endpoints.
This module exposes the symmetrized pixel distance.
"""
import numpy as np
from fastapi import APIRouter

from graspalign.routers.errors import http_error
from graspalign.schemas.evaluation import DistanceRequest, DistanceResponse
from graspalign.services.evaluation import EvaluationService

router = APIRouter()


@router.post("/distance", response_model=DistanceResponse)
def distance(request: DistanceRequest) -> DistanceResponse:
    """
    Average minimum pixel distance in both directions and their mean.

    Args:
        request: Pixel sets A and B

    Returns:
        D(A, B), D(B, A) and D̂
    """
    try:
        a, b = np.asarray(request.A), np.asarray(request.B)
        d_ab = EvaluationService.avg_min_distance(a, b, request.method)
        d_ba = EvaluationService.avg_min_distance(b, a, request.method)
    except ValueError as e:
        raise http_error("Distance", e)
    return DistanceResponse(D_AB=d_ab, D_BA=d_ba, D_hat=0.5 * (d_ab + d_ba))
