"""
Service layer for pixel-distance evaluation and overlays.

D(A, B) is the mean over a in A of the distance to the nearest b in B; the
reported figure is the symmetrized D̂ = (D(A, B) + D(B, A)) / 2.
"""
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from graspalign.core.errors import InputError
from graspalign.core.logging import logger
from graspalign.models.alignment import AlignmentProblem, AlignmentSolution
from graspalign.models.geometry import DenseCloud, Intrinsics, PixelSet, Transform3
from graspalign.services.coord_align import CoordinateAlignmentService
from graspalign.services.se3 import apply_points
from graspalign.utils.formats import write_ppm

ACCENT = (255, 64, 0)
BRUTE_CHUNK = 2048


class EvaluationService:
    """Service class for the pixel-distance metric."""

    @staticmethod
    def _points(s: Union[PixelSet, np.ndarray]) -> np.ndarray:
        return s.points if isinstance(s, PixelSet) else PixelSet(s).points

    @staticmethod
    def avg_min_distance(A: Union[PixelSet, np.ndarray], B: Union[PixelSet, np.ndarray], method: str = "kdtree") -> float:
        """
        Average distance from each point of A to its nearest point of B.

        Args:
            A: Source pixel set
            B: Reference pixel set
            method: "kdtree" (cKDTree) or "brute" (exhaustive, used as the oracle)

        Returns:
            D(A, B) in pixels
        """
        a = EvaluationService._points(A)
        b = EvaluationService._points(B)
        if method == "kdtree":
            dist, _ = cKDTree(b).query(a, k=1)
            return float(dist.mean())
        if method == "brute":
            mins = np.empty(a.shape[0])
            for start in range(0, a.shape[0], BRUTE_CHUNK):
                chunk = a[start:start + BRUTE_CHUNK]
                d = np.linalg.norm(chunk[:, None, :] - b[None, :, :], axis=-1)
                mins[start:start + BRUTE_CHUNK] = d.min(axis=1)
            return float(mins.mean())
        raise InputError(f"method must be 'kdtree' or 'brute', got {method!r}")

    @staticmethod
    def symmetrized(A, B, method: str = "kdtree") -> float:
        return 0.5 * (
            EvaluationService.avg_min_distance(A, B, method) + EvaluationService.avg_min_distance(B, A, method)
        )

    @staticmethod
    def distance_report(A, B) -> Dict[str, float]:
        d_ab = EvaluationService.avg_min_distance(A, B)
        d_ba = EvaluationService.avg_min_distance(B, A)
        return {"D_AB": d_ab, "D_BA": d_ba, "D_hat": 0.5 * (d_ab + d_ba)}

    @staticmethod
    def silhouette_pixels(mask: np.ndarray) -> PixelSet:
        """(column, row) coordinates of every set pixel, row-major order."""
        mask = np.asarray(mask)
        if mask.ndim != 2:
            raise InputError(f"mask must be a 2D raster, got shape {mask.shape}")
        rows, cols = np.nonzero(mask)
        if rows.size == 0:
            raise InputError("mask has no set pixels")
        return PixelSet(np.stack([cols, rows], axis=1).astype(np.float64))

    @staticmethod
    def project_cloud(cloud: DenseCloud, pose: Transform3, K: Intrinsics, subsample: int = 1,
                      depth_epsilon: float = 1e-6) -> np.ndarray:
        """Pixels of the cloud placed by `pose`; points at or behind the camera plane are dropped."""
        pts = apply_points(cloud.points[::max(1, subsample)], pose)
        front = pts[:, 2] > depth_epsilon
        if not np.all(front):
            logger.warning(f"Dropped {int((~front).sum())} points behind the camera")
        pts = pts[front]
        if pts.shape[0] == 0:
            return np.zeros((0, 2))
        return CoordinateAlignmentService.project(K, pts, depth_epsilon)

    @staticmethod
    def render_overlay(cloud: DenseCloud, pose: Transform3, K: Intrinsics, mask: np.ndarray,
                       out_path: Union[str, Path]) -> Path:
        """
        Write a P6 overlay: silhouette white on black, projected cloud in the accent colour.

        Args:
            cloud: Points in the object frame
            pose: Object-to-camera pose
            K: Intrinsics
            mask: Silhouette raster (H, W)
            out_path: Output file

        Returns:
            The written path
        """
        mask = np.asarray(mask).astype(bool)
        h, w = mask.shape
        image = np.zeros((h, w, 3), dtype=np.uint8)
        image[mask] = 255
        pixels = EvaluationService.project_cloud(cloud, pose, K)
        if pixels.shape[0]:
            cols = np.rint(pixels[:, 0]).astype(np.int64)
            rows = np.rint(pixels[:, 1]).astype(np.int64)
            inside = (cols >= 0) & (cols < w) & (rows >= 0) & (rows < h)
            image[rows[inside], cols[inside]] = ACCENT
        return write_ppm(out_path, image)

    @staticmethod
    def evaluate_poses(
        cloud: DenseCloud,
        poses: Sequence[Transform3],
        masks: Sequence[np.ndarray],
        K: Intrinsics,
        method: str,
        subsample: int = 1,
        overlay_dir: Optional[Union[str, Path]] = None,
    ) -> dict:
        """
        D̂ between the projected cloud and the silhouette at every test pose.

        Returns:
            {"method", "per_pose": [{"index", "D_AB", "D_BA", "D_hat"}], "mean_D_hat"}
        """
        if len(poses) != len(masks):
            raise InputError(f"{len(poses)} test poses but {len(masks)} masks")
        rows: List[dict] = []
        for i, (pose, mask) in enumerate(zip(poses, masks)):
            silhouette = EvaluationService.silhouette_pixels(mask)
            pixels = EvaluationService.project_cloud(cloud, pose, K, subsample)
            if pixels.shape[0] == 0:
                raise InputError(f"test pose {i}: the predicted cloud lies entirely behind the camera")
            row = {"index": i, **EvaluationService.distance_report(pixels, silhouette)}
            rows.append(row)
            if overlay_dir is not None:
                EvaluationService.render_overlay(cloud, pose, K, mask, Path(overlay_dir) / f"{method}_{i:03d}.ppm")
        mean = float(np.mean([r["D_hat"] for r in rows])) if rows else float("nan")
        logger.info(f"{method}: mean D_hat {mean:.6g} px over {len(rows)} test poses")
        return {"method": method, "per_pose": rows, "mean_D_hat": mean}

    @staticmethod
    def evaluate_solution(
        solution: AlignmentSolution,
        problem: AlignmentProblem,
        test_ee_poses: Sequence[Transform3],
        masks: Sequence[np.ndarray],
        subsample: int = 1,
        overlay_dir: Optional[Union[str, Path]] = None,
        mean: str = "matrix",
    ) -> dict:
        """Evaluate a structured solution: object poses come from the estimator chain at each test end-effector pose."""
        poses = [
            CoordinateAlignmentService.predict_object_pose(solution, problem, ee, mean) for ee in test_ee_poses
        ]
        cloud = CoordinateAlignmentService.metric_cloud(solution, problem)
        return EvaluationService.evaluate_poses(
            cloud, poses, masks, problem.intrinsics, solution.method, subsample, overlay_dir
        )
