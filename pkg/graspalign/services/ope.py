"""
Service layer for reading a static-scene reconstruction as a stationary camera
watching a moving object.
"""
from collections.abc import Sequence as SequenceABC
from pathlib import Path
from typing import List, Sequence, Union

from graspalign.core.errors import InputError
from graspalign.core.logging import logger
from graspalign.models.alignment import AlignmentProblem, CameraObjectPose
from graspalign.models.geometry import DenseCloud, Intrinsics, Transform3
from graspalign.models.pointmap import GlobalAlignmentResult
from graspalign.services.se3 import apply_points
from graspalign.utils.formats import write_ply


class PoseClouds(SequenceABC):
    """Per-pose object clouds, computed when indexed.

    Item n is (CameraObjectPose_n, dense transformed by inverse(P̄_n)).
    """

    def __init__(self, dense: DenseCloud, camera_poses: Sequence[Transform3]):
        self.dense = dense
        self._inverses = [p.inverse() for p in camera_poses]

    def __len__(self) -> int:
        return len(self._inverses)

    def __getitem__(self, n):
        if isinstance(n, slice):
            return [self[i] for i in range(*n.indices(len(self)))]
        inv = self._inverses[n]
        return CameraObjectPose.from_transform(inv), apply_points(self.dense, inv)

    def poses(self) -> List[CameraObjectPose]:
        return [CameraObjectPose.from_transform(inv) for inv in self._inverses]


class ObjectPoseService:
    """Service class for object-to-camera poses and unscaled reconstructions."""

    @staticmethod
    def reinterpret(result: GlobalAlignmentResult) -> PoseClouds:
        """
        Re-express the reconstruction in each camera frame.

        Args:
            result: Pairwise alignment result

        Returns:
            Lazy sequence of (CameraObjectPose, DenseCloud), one per camera pose
        """
        if len(result.camera_poses) < 1:
            raise InputError("alignment result has no camera poses")
        return PoseClouds(result.dense, result.camera_poses)

    @staticmethod
    def scaled_pose(pose: CameraObjectPose, alpha: float) -> Transform3:
        """Object-to-camera transform with the translation brought to metric scale by alpha."""
        if not alpha > 0:
            raise InputError(f"alpha must be positive, got {alpha}")
        return Transform3(pose.rotation, alpha * pose.translation)

    @staticmethod
    def build_problem(
        result: GlobalAlignmentResult,
        ee_poses: Sequence[Transform3],
        intrinsics: Intrinsics,
        render_subsample: int = 8,
    ) -> AlignmentProblem:
        """Pair the reinterpreted poses with recorded end-effector poses (same image order)."""
        if len(ee_poses) != len(result.camera_poses):
            raise InputError(
                f"{len(ee_poses)} end-effector poses for {len(result.camera_poses)} images"
            )
        poses = ObjectPoseService.reinterpret(result).poses()
        return AlignmentProblem(list(ee_poses), poses, result.dense, intrinsics, render_subsample)

    @staticmethod
    def export_ply(clouds: PoseClouds, out_dir: Union[str, Path], prefix: str = "pose") -> List[Path]:
        """Write one ASCII PLY per pose."""
        out_dir = Path(out_dir)
        paths = []
        for n in range(len(clouds)):
            _, cloud = clouds[n]
            paths.append(write_ply(out_dir / f"{prefix}_{n:03d}.ply", cloud))
        logger.info(f"Wrote {len(paths)} per-pose clouds to {out_dir}")
        return paths
