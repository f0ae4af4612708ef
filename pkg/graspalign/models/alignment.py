"""
Inputs and outputs of the end-effector/object coordinate alignment.
"""
from dataclasses import dataclass, field
from typing import List

import numpy as np

from graspalign.core.errors import InputError
from graspalign.models.geometry import DenseCloud, Intrinsics, Rotation3, Transform3, _frozen


@dataclass(frozen=True, eq=False)
class CameraObjectPose:
    """Rotation and translation blocks of an inverted camera pose (gauge units)."""

    rotation: Rotation3
    translation: np.ndarray

    def __post_init__(self):
        if not isinstance(self.rotation, Rotation3):
            object.__setattr__(self, "rotation", Rotation3(self.rotation))
        t = np.asarray(self.translation, dtype=np.float64).reshape(-1)
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise InputError(f"camera-object translation must be a finite 3-vector, got {t}")
        object.__setattr__(self, "translation", _frozen(t))

    @property
    def R(self) -> np.ndarray:
        return self.rotation.m

    @property
    def t(self) -> np.ndarray:
        return self.translation

    @classmethod
    def from_transform(cls, t: Transform3) -> "CameraObjectPose":
        return cls(t.rotation, t.translation)

    def as_transform(self) -> Transform3:
        return Transform3(self.rotation, self.translation)


@dataclass(frozen=True, eq=False)
class AlignmentProblem:
    ee_poses: List[Transform3]
    cam_obj_poses: List[CameraObjectPose]
    dense: DenseCloud
    intrinsics: Intrinsics
    render_subsample: int = 8

    def __post_init__(self):
        if len(self.ee_poses) != len(self.cam_obj_poses):
            raise InputError(
                f"{len(self.ee_poses)} end-effector poses but {len(self.cam_obj_poses)} camera-object poses"
            )
        if len(self.ee_poses) < 2:
            raise InputError(f"alignment needs at least 2 poses, got {len(self.ee_poses)}")
        if self.render_subsample < 1:
            raise InputError("render_subsample must be a positive integer")
        object.__setattr__(self, "ee_poses", list(self.ee_poses))
        object.__setattr__(self, "cam_obj_poses", list(self.cam_obj_poses))

    @property
    def n_poses(self) -> int:
        return len(self.ee_poses)

    def with_subsample(self, step: int) -> "AlignmentProblem":
        return AlignmentProblem(self.ee_poses, self.cam_obj_poses, self.dense, self.intrinsics, step)

    def subset(self, indices) -> "AlignmentProblem":
        """Problem restricted to the given pose indices."""
        idx = list(indices)
        return AlignmentProblem(
            [self.ee_poses[i] for i in idx],
            [self.cam_obj_poses[i] for i in idx],
            self.dense,
            self.intrinsics,
            self.render_subsample,
        )


@dataclass(frozen=True, eq=False)
class AlignmentSolution:
    """Recovered H (object<-end-effector, metric) and gauge-to-metre scale alpha."""

    H: Transform3
    alpha: float
    final_loss: float
    per_pose_residuals: np.ndarray
    cam_base: Transform3
    cam_base_spread: float = 0.0
    method: str = "rendered"
    start_losses: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha <= 0:
            raise InputError(f"alpha must be positive, got {self.alpha}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "final_loss", float(self.final_loss))
        object.__setattr__(self, "per_pose_residuals", _frozen(np.asarray(self.per_pose_residuals).reshape(-1)))

    def to_json(self) -> dict:
        return {
            "H": self.H.to_json()["matrix"],
            "alpha": self.alpha,
            "final_loss_px": self.final_loss,
            "residuals_px": [float(r) for r in self.per_pose_residuals],
            "cam_base": self.cam_base.to_json()["matrix"],
            "cam_base_spread": float(self.cam_base_spread),
            "method": self.method,
            "start_losses": [float(v) for v in self.start_losses],
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }

    @classmethod
    def from_json(cls, data: dict) -> "AlignmentSolution":
        try:
            return cls(
                H=Transform3.from_json(data["H"]),
                alpha=float(data["alpha"]),
                final_loss=float(data.get("final_loss_px", float("nan"))),
                per_pose_residuals=np.asarray(data.get("residuals_px", []), dtype=np.float64),
                cam_base=Transform3.from_json(data["cam_base"]) if "cam_base" in data else Transform3.identity(),
                cam_base_spread=float(data.get("cam_base_spread", 0.0)),
                method=data.get("method", "rendered"),
                start_losses=list(data.get("start_losses", [])),
                iterations=int(data.get("iterations", 0)),
                converged=bool(data.get("converged", True)),
            )
        except KeyError as e:
            raise InputError(f"solution JSON missing key {e}") from e
