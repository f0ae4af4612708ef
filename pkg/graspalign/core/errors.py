"""
Exception hierarchy.

Services raise these; the CLI turns them into exit codes and the routers into
HTTP errors. Every class derives from ValueError so callers that only care
about "bad input" can keep catching ValueError.
"""
from typing import Optional


class GraspAlignError(ValueError):
    """Base class for all domain errors."""

    exit_code: int = 1
    http_status: int = 422


class InputError(GraspAlignError):
    """Malformed files, schema violations, size mismatches, bad parameters."""

    exit_code = 2


class NotProjectableError(InputError):
    """Matrix too degenerate to project onto SO(3)."""


class BehindCameraError(InputError):
    """A point reached the camera plane (depth <= depth_epsilon)."""

    def __init__(self, message: str, pose_index: Optional[int] = None, point_index: Optional[int] = None):
        super().__init__(message)
        self.pose_index = pose_index
        self.point_index = point_index


class NoSupervisionError(InputError):
    """Every confidence is zero."""


class VisibilityError(InputError):
    """A simulated configuration puts the object outside the camera view."""


class GraphError(GraspAlignError):
    """The pair graph is disconnected or an image has no reference pair."""

    exit_code = 3


class DivergenceError(GraspAlignError):
    """The solver's best loss stayed above the divergence threshold."""

    exit_code = 4


class IKError(GraspAlignError):
    """Inverse kinematics did not reach the requested pose."""

    exit_code = 5

    def __init__(self, message: str, residual: float = float("nan"), q_best=None):
        super().__init__(message)
        self.residual = residual
        self.q_best = q_best
