"""
Alignment API endpoints.
This module exposes the coordinate-alignment solver and its loss.
"""
from fastapi import APIRouter

from graspalign.core.logging import logger
from graspalign.models.geometry import Transform3
from graspalign.routers.errors import http_error
from graspalign.schemas.alignment import LossRequest, LossResponse, SolveRequest, SolveResponse
from graspalign.services.baselines import BaselineService
from graspalign.services.coord_align import CoordinateAlignmentService

router = APIRouter()


@router.post("/solve", response_model=SolveResponse)
def solve(request: SolveRequest) -> SolveResponse:
    """
    Recover H and alpha for an inline problem.

    Args:
        request: Problem, method and solver options

    Returns:
        Solution
    """
    logger.info(f"Solve requested: {len(request.problem.ee_poses)} poses, method {request.method}")
    try:
        problem = request.problem.to_problem()
        if request.method == "rendered":
            solution = CoordinateAlignmentService.solve(problem, request.options)
        else:
            solution = BaselineService.solve_no_render(problem, request.options)
    except ValueError as e:
        raise http_error("Solve", e)
    return SolveResponse(**solution.to_json())


@router.post("/loss", response_model=LossResponse)
def loss(request: LossRequest) -> LossResponse:
    """
    Rendered-pixel loss at a fixed (H, alpha).

    Args:
        request: Problem, H and alpha

    Returns:
        Mean loss and per-pose residuals in pixels
    """
    try:
        problem = request.problem.to_problem()
        residuals = CoordinateAlignmentService.residuals(
            Transform3.from_json(request.H), request.alpha, problem, mean=request.mean
        )
    except ValueError as e:
        raise http_error("Loss", e)
    return LossResponse(loss_px=float(residuals.mean()), residuals_px=[float(r) for r in residuals])
