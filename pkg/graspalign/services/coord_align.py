"""
Service layer for the end-effector/object coordinate alignment.

Unknowns are the fixed transform H between end-effector and object and the
scale alpha taking reconstruction units to metres. Products are evaluated
exactly as written:

    A[n, m]  = E_n^-1 E_m
    f_n      = mean over m != n of (H^-1 A[n, m] H) C_m(alpha)
    cam_base = E_n H C_n(alpha)

where C_m(alpha) is the object-to-camera pose of image m with its translation
multiplied by alpha. The 4x4 mean is taken in coordinates centred on the
metric reconstruction centroid, then the rotation block is projected onto
SO(3).
"""
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import torch
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation

from graspalign.core.config import CoordAlignOptions
from graspalign.core.errors import BehindCameraError, DivergenceError, InputError
from graspalign.core.logging import logger
from graspalign.models.alignment import AlignmentProblem, AlignmentSolution
from graspalign.models.geometry import DenseCloud, Intrinsics, Rotation3, Transform3
from graspalign.services import autodiff
from graspalign.services.optim import ParamGroup, run_adam
from graspalign.services.se3 import compose, inverse, mean_transform, procrustes_project

MEAN_KINDS = ("matrix", "log")


@dataclass
class ProblemTensors:
    """Torch view of an AlignmentProblem at a fixed render subsample."""

    E: torch.Tensor           # (N, 4, 4) end-effector poses
    A: torch.Tensor           # (N, N, 4, 4) relative end-effector poses
    R: torch.Tensor           # (N, 3, 3) camera-object rotations
    t: torch.Tensor           # (N, 3) camera-object translations, gauge units
    X: torch.Tensor           # (P, 3) subsampled reconstruction
    centroid: torch.Tensor    # (3,) centroid of the full reconstruction
    target: torch.Tensor      # (N, P, 2) pixels of the reinterpreted clouds
    W: torch.Tensor           # (N, N) averaging weights, zero diagonal
    K: Intrinsics
    depth_epsilon: float

    @property
    def n_poses(self) -> int:
        return self.E.shape[0]


@dataclass
class Objective:
    """A scalar loss and a residual vector over the raw parameters (rotation block, translation, log alpha)."""

    loss: Callable[[torch.Tensor, torch.Tensor, torch.Tensor], torch.Tensor]
    residuals: Callable[[torch.Tensor, torch.Tensor, torch.Tensor], torch.Tensor]


class CoordinateAlignmentService:
    """Service class for recovering H and alpha."""

    @staticmethod
    def relative_ee(n: int, m: int, ee_poses: Sequence[Transform3]) -> Transform3:
        """A[n, m] = E_n^-1 E_m."""
        for idx in (n, m):
            if not 0 <= idx < len(ee_poses):
                raise InputError(f"pose index {idx} out of range for {len(ee_poses)} poses")
        if n == m:
            return Transform3.identity()
        return compose(inverse(ee_poses[n]), ee_poses[m])

    @staticmethod
    def scaled_cam_obj(problem: AlignmentProblem, m: int, alpha: float) -> Transform3:
        pose = problem.cam_obj_poses[m]
        return Transform3(pose.rotation, alpha * pose.translation)

    @staticmethod
    def _average(contribs: List[np.ndarray], anchor: np.ndarray, mean: str) -> Transform3:
        """Mean of 4x4 contributions about the anchor point, rotation block projected."""
        rots = np.stack([c[:3, :3] for c in contribs])
        moved = np.stack([c[:3, :3] @ anchor + c[:3, 3] for c in contribs]).mean(axis=0)
        if mean == "log":
            base = Rotation.from_matrix(procrustes_project(rots[0]).m)
            rel = [base.inv() * Rotation.from_matrix(procrustes_project(r).m) for r in rots]
            tangent = np.mean([r.as_rotvec() for r in rel], axis=0)
            rot = (base * Rotation.from_rotvec(tangent)).as_matrix()
        elif mean == "matrix":
            rot = procrustes_project(rots.mean(axis=0)).m
        else:
            raise InputError(f"mean must be one of {MEAN_KINDS}, got {mean!r}")
        return Transform3(Rotation3(rot), moved - rot @ anchor)

    @staticmethod
    def estimator(n: int, H: Transform3, alpha: float, problem: AlignmentProblem, mean: str = "matrix") -> Transform3:
        """
        Predict the object-to-camera pose of image n from all other images.

        Args:
            n: Image index
            H: Candidate end-effector/object transform
            alpha: Candidate scale
            problem: Alignment problem
            mean: "matrix" (4x4 mean + Procrustes) or "log" (rotation log-mean)

        Returns:
            f_n(H, alpha)
        """
        if problem.n_poses < 2:
            raise InputError("the estimator needs at least 2 poses")
        if not alpha > 0:
            raise InputError(f"alpha must be positive, got {alpha}")
        Hinv = H.inverse().matrix
        contribs = []
        for m in range(problem.n_poses):
            if m == n:
                continue
            A = CoordinateAlignmentService.relative_ee(n, m, problem.ee_poses).matrix
            C = CoordinateAlignmentService.scaled_cam_obj(problem, m, alpha).matrix
            contribs.append(Hinv @ A @ H.matrix @ C)
        anchor = alpha * problem.dense.points.mean(axis=0)
        return CoordinateAlignmentService._average(contribs, anchor, mean)

    @staticmethod
    def predict_object_pose(
        solution: AlignmentSolution, problem: AlignmentProblem, ee_pose: Transform3, mean: str = "matrix"
    ) -> Transform3:
        """Object-to-camera pose at an end-effector pose outside the training set, averaged over every training image."""
        H = solution.H
        Hinv = H.inverse().matrix
        Einv = ee_pose.inverse().matrix
        contribs = [
            Hinv @ Einv @ problem.ee_poses[m].matrix @ H.matrix
            @ CoordinateAlignmentService.scaled_cam_obj(problem, m, solution.alpha).matrix
            for m in range(problem.n_poses)
        ]
        anchor = solution.alpha * problem.dense.points.mean(axis=0)
        return CoordinateAlignmentService._average(contribs, anchor, mean)

    @staticmethod
    def metric_cloud(solution: AlignmentSolution, problem: AlignmentProblem) -> DenseCloud:
        """Reconstruction scaled to metres."""
        return problem.dense.scaled(solution.alpha)

    @staticmethod
    def project(K: Intrinsics, cloud: DenseCloud, depth_epsilon: float = 1e-6) -> np.ndarray:
        """
        Perspective projection, index preserving.

        Args:
            K: Intrinsics
            cloud: Points in the camera frame
            depth_epsilon: Smallest admissible depth

        Returns:
            (N, 2) pixel coordinates (u, v)
        """
        pts = cloud.points if isinstance(cloud, DenseCloud) else np.asarray(cloud, dtype=np.float64).reshape(-1, 3)
        z = pts[:, 2]
        bad = np.flatnonzero(z <= depth_epsilon)
        if bad.size:
            raise BehindCameraError(
                f"point {int(bad[0])} has depth {z[bad[0]]:.3g} <= {depth_epsilon:g}", point_index=int(bad[0])
            )
        return np.stack([K.fx * pts[:, 0] / z + K.cx, K.fy * pts[:, 1] / z + K.cy], axis=1)

    @staticmethod
    def prepare(problem: AlignmentProblem, depth_epsilon: float = 1e-6, subsample: Optional[int] = None) -> ProblemTensors:
        """Tensors shared by every loss evaluation; target pixels are computed once."""
        n = problem.n_poses
        step = problem.render_subsample if subsample is None else subsample
        E = autodiff.as_tensor(np.stack([e.matrix for e in problem.ee_poses]))
        Einv = autodiff.invert(E)
        A = Einv.unsqueeze(1) @ E.unsqueeze(0)
        R = autodiff.as_tensor(np.stack([p.R for p in problem.cam_obj_poses]))
        t = autodiff.as_tensor(np.stack([p.t for p in problem.cam_obj_poses]))
        X = autodiff.as_tensor(problem.dense.points[::step])
        centroid = autodiff.as_tensor(problem.dense.points.mean(axis=0))
        W = (torch.ones((n, n), dtype=autodiff.DTYPE) - torch.eye(n, dtype=autodiff.DTYPE)) / (n - 1)
        with torch.no_grad():
            observed = X.unsqueeze(0) @ R.transpose(-1, -2) + t.unsqueeze(1)
            target = autodiff.project(problem.intrinsics, observed, depth_epsilon)
        return ProblemTensors(E, A, R, t, X, centroid, target, W, problem.intrinsics, depth_epsilon)

    @staticmethod
    def estimator_tensor(
        rot: torch.Tensor, trans: torch.Tensor, alpha: torch.Tensor, data: ProblemTensors, mean: str = "matrix"
    ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Batched f_n for every n: returns rotations (N,3,3), translations (N,3) and the metric anchor."""
        H = autodiff.make_transform(rot, trans)
        Hinv = autodiff.invert(H)
        C = autodiff.make_transform(data.R, alpha * data.t)
        contrib = Hinv @ data.A @ H @ C.unsqueeze(0)
        anchor = alpha * data.centroid
        moved = contrib[..., :3, :3] @ anchor + contrib[..., :3, 3]
        moved_mean = torch.einsum("nm,nmi->ni", data.W, moved)
        if mean == "matrix":
            rot_f = autodiff.procrustes(torch.einsum("nm,nmij->nij", data.W, contrib[..., :3, :3]))
        elif mean == "log":
            n = data.n_poses
            rot_f = torch.stack([
                autodiff.rotation_log_mean(contrib[i, [m for m in range(n) if m != i], :3, :3])
                for i in range(n)
            ])
        else:
            raise InputError(f"mean must be one of {MEAN_KINDS}, got {mean!r}")
        t_f = moved_mean - (rot_f @ anchor)
        return rot_f, t_f, anchor

    @staticmethod
    def pixel_errors(
        rot_raw: torch.Tensor, trans: torch.Tensor, log_alpha: torch.Tensor, data: ProblemTensors,
        mean: str = "matrix", clamp: bool = True,
    ) -> torch.Tensor:
        """(N, P, 2) pixel differences between the estimated and reinterpreted clouds."""
        rot = autodiff.procrustes(rot_raw)
        alpha = torch.exp(log_alpha)
        rot_f, t_f, _ = CoordinateAlignmentService.estimator_tensor(rot, trans, alpha, data, mean)
        Y = (alpha * data.X).unsqueeze(0) @ rot_f.transpose(-1, -2) + t_f.unsqueeze(1)
        pixels = autodiff.project(data.K, Y, data.depth_epsilon, clamp=clamp)
        return pixels - data.target

    @staticmethod
    def loss_tensor(
        rot_raw: torch.Tensor, trans: torch.Tensor, log_alpha: torch.Tensor, data: ProblemTensors,
        mean: str = "matrix", clamp: bool = True, per_pose: bool = False,
    ) -> torch.Tensor:
        """Mean per-point pixel distance over the 13 raw parameters."""
        diff = CoordinateAlignmentService.pixel_errors(rot_raw, trans, log_alpha, data, mean, clamp)
        dist = torch.linalg.vector_norm(diff, dim=-1)
        return dist.mean(dim=1) if per_pose else dist.mean()

    @staticmethod
    def rendered_objective(data: ProblemTensors, mean: str) -> Objective:
        return Objective(
            loss=lambda r, t, a: CoordinateAlignmentService.loss_tensor(r, t, a, data, mean),
            residuals=lambda r, t, a: CoordinateAlignmentService.pixel_errors(r, t, a, data, mean).reshape(-1),
        )

    @staticmethod
    def loss(H: Transform3, alpha: float, problem: AlignmentProblem, depth_epsilon: float = 1e-6,
             mean: str = "matrix") -> float:
        """
        Rendered-pixel mean absolute error at (H, alpha).

        Args:
            H: End-effector/object transform
            alpha: Scale, must be positive
            problem: Alignment problem (its render_subsample applies)
            depth_epsilon: Smallest admissible depth

        Returns:
            Loss in pixels
        """
        return float(CoordinateAlignmentService.residuals(H, alpha, problem, depth_epsilon, mean).mean())

    @staticmethod
    def residuals(H: Transform3, alpha: float, problem: AlignmentProblem, depth_epsilon: float = 1e-6,
                  mean: str = "matrix") -> np.ndarray:
        """Per-pose mean pixel distance; points behind the camera raise BehindCameraError."""
        if not alpha > 0:
            raise InputError(f"alpha must be positive, got {alpha}")
        data = CoordinateAlignmentService.prepare(problem, depth_epsilon)
        with torch.no_grad():
            value = CoordinateAlignmentService.loss_tensor(
                autodiff.as_tensor(H.R), autodiff.as_tensor(H.t), autodiff.as_tensor(np.log(alpha)),
                data, mean, clamp=False, per_pose=True,
            )
        return value.numpy()

    @staticmethod
    def initial_alpha(problem: AlignmentProblem) -> float:
        """Ratio of end-effector to camera-frame translation spreads."""
        ee = np.stack([e.t for e in problem.ee_poses])
        cam = np.stack([p.t for p in problem.cam_obj_poses])
        iu = np.triu_indices(problem.n_poses, k=1)
        ee_spread = np.median(np.linalg.norm(ee[:, None] - ee[None], axis=-1)[iu])
        cam_spread = np.median(np.linalg.norm(cam[:, None] - cam[None], axis=-1)[iu])
        if cam_spread <= 0 or ee_spread <= 0:
            return 1.0
        return float(ee_spread / cam_spread)

    @staticmethod
    def start_rotations(n_starts: int, seed: int) -> List[np.ndarray]:
        """Identity first, then seeded random rotations."""
        rng = np.random.default_rng(seed)
        rots = [np.eye(3)]
        for _ in range(n_starts - 1):
            rots.append(Rotation.random(random_state=rng).as_matrix())
        return rots

    @staticmethod
    def polish(
        objective: Objective, rot: np.ndarray, trans: np.ndarray, log_alpha: float,
    ) -> Tuple[np.ndarray, np.ndarray, float]:
        """Gauss-Newton refinement over a local rotation vector, translation and log alpha."""
        base = rot.copy()

        def unpack(x):
            r = base @ Rotation.from_rotvec(x[:3]).as_matrix()
            return r, x[3:6], x[6]

        def fun(x):
            r, t, la = unpack(x)
            with torch.no_grad():
                res = objective.residuals(autodiff.as_tensor(r), autodiff.as_tensor(t), autodiff.as_tensor(la))
            return res.numpy()

        x0 = np.concatenate([np.zeros(3), trans, [log_alpha]])
        sol = least_squares(fun, x0, method="trf", x_scale="jac", max_nfev=200)
        r, t, la = unpack(sol.x)
        return procrustes_project(r).m, np.asarray(t), float(la)

    @staticmethod
    def eval_loss(objective: Objective, rot: np.ndarray, trans: np.ndarray, log_alpha: float) -> float:
        with torch.no_grad():
            value = objective.loss(autodiff.as_tensor(rot), autodiff.as_tensor(trans), autodiff.as_tensor(log_alpha))
        return float(value)

    @staticmethod
    def run_starts(
        problem: AlignmentProblem, objective: Objective, opts: CoordAlignOptions, label: str
    ) -> Tuple[Transform3, float, List[float], int, bool]:
        """
        Multi-start first-order minimization followed by the optional polish.

        Returns:
            Best H, best alpha, per-start losses, iterations of the best start and its convergence flag
        """
        alpha0 = opts.alpha_init if opts.alpha_init is not None else CoordinateAlignmentService.initial_alpha(problem)
        logger.info(f"{label}: {problem.n_poses} poses, {opts.n_starts} starts, alpha init {alpha0:.6g}")

        best = None
        start_losses = []
        for k, rot0 in enumerate(CoordinateAlignmentService.start_rotations(opts.n_starts, opts.seed)):
            rot_raw = autodiff.as_tensor(rot0, requires_grad=True)
            trans = autodiff.as_tensor(np.zeros(3), requires_grad=True)
            log_alpha = autodiff.as_tensor(np.log(alpha0), requires_grad=True)

            def reproject():
                rot_raw.copy_(autodiff.procrustes(rot_raw))

            result = run_adam(
                [
                    ParamGroup([rot_raw], opts.rot_step, "rotation"),
                    ParamGroup([trans], opts.trans_step, "translation"),
                    ParamGroup([log_alpha], opts.log_alpha_step, "log_alpha"),
                ],
                lambda: objective.loss(rot_raw, trans, log_alpha),
                max_iters=opts.max_iters,
                post_step=reproject,
                log_every=opts.log_every,
                label=f"{label}[start {k}]",
            )
            rot = procrustes_project(rot_raw.detach().numpy()).m
            t = trans.detach().numpy().copy()
            la = float(log_alpha.detach())
            value = CoordinateAlignmentService.eval_loss(objective, rot, t, la)

            if opts.polish and np.isfinite(value):
                p_rot, p_t, p_la = CoordinateAlignmentService.polish(objective, rot, t, la)
                p_value = CoordinateAlignmentService.eval_loss(objective, p_rot, p_t, p_la)
                if p_value < value:
                    logger.debug(f"{label}[start {k}]: polish {value:.6g} -> {p_value:.6g}")
                    rot, t, la, value = p_rot, p_t, p_la, p_value

            logger.debug(f"{label}[start {k}]: loss {value:.6g} after {result.iterations} iterations")
            start_losses.append(value)
            if best is None or value < best[0]:
                best = (value, rot, t, la, result.iterations, result.converged)

        value, rot, t, la, iterations, converged = best
        if not np.isfinite(value) or value > opts.divergence_px:
            raise DivergenceError(
                f"{label} diverged: best loss {value:.3g} exceeds {opts.divergence_px:g}; "
                "try more starts or a different alpha_init"
            )
        return Transform3(Rotation3(rot), t), float(np.exp(la)), start_losses, iterations, converged

    @staticmethod
    def camera_base(solution: AlignmentSolution, problem: AlignmentProblem) -> Tuple[Transform3, float]:
        """
        Pose-averaged camera-base transform E_n H C_n(alpha).

        Returns:
            The mean transform and the largest distance of any per-pose product from it
        """
        products = [
            compose(compose(problem.ee_poses[n], solution.H),
                    CoordinateAlignmentService.scaled_cam_obj(problem, n, solution.alpha))
            for n in range(problem.n_poses)
        ]
        return mean_transform(products)

    @staticmethod
    def solve(problem: AlignmentProblem, opts: Optional[CoordAlignOptions] = None) -> AlignmentSolution:
        """
        Recover H and alpha by minimizing the rendered-pixel loss.

        Args:
            problem: Alignment problem with at least 2 poses
            opts: Solver options

        Returns:
            AlignmentSolution for the best start
        """
        opts = opts or CoordAlignOptions()
        if problem.n_poses < 2:
            raise InputError("solve needs at least 2 poses")
        if problem.n_poses < 3:
            logger.warning("Solving with 2 poses; at least 3 are recommended")
        data = CoordinateAlignmentService.prepare(problem, opts.depth_epsilon, opts.render_subsample)
        objective = CoordinateAlignmentService.rendered_objective(data, opts.mean)
        H, alpha, start_losses, iterations, converged = CoordinateAlignmentService.run_starts(
            problem, objective, opts, "solve"
        )
        return CoordinateAlignmentService.finish(problem, H, alpha, start_losses, iterations, converged, "rendered", opts)

    @staticmethod
    def finish(problem, H, alpha, start_losses, iterations, converged, method, opts) -> AlignmentSolution:
        """Package a solution: rendered residuals (solver subsample) and the camera-base diagnostic."""
        data = CoordinateAlignmentService.prepare(problem, opts.depth_epsilon, opts.render_subsample)
        with torch.no_grad():
            per_pose = CoordinateAlignmentService.loss_tensor(
                autodiff.as_tensor(H.R), autodiff.as_tensor(H.t), autodiff.as_tensor(np.log(alpha)),
                data, opts.mean, per_pose=True,
            ).numpy()
        provisional = AlignmentSolution(
            H=H, alpha=alpha, final_loss=float(per_pose.mean()), per_pose_residuals=per_pose,
            cam_base=Transform3.identity(),
        )
        cam_base, spread = CoordinateAlignmentService.camera_base(provisional, problem)
        logger.info(
            f"{method}: alpha {alpha:.6g}, loss {per_pose.mean():.6g} px, camera-base spread {spread:.3g}"
        )
        return AlignmentSolution(
            H=H,
            alpha=alpha,
            final_loss=float(per_pose.mean()),
            per_pose_residuals=per_pose,
            cam_base=cam_base,
            cam_base_spread=spread,
            method=method,
            start_losses=start_losses,
            iterations=iterations,
            converged=converged,
        )
