"""
Service layer for the two comparison methods.

no-render  same estimator and parameters as the main solver, but the objective
           is the SE(3) distance between f_n and the observed pose
regress    a small network mapping the flattened end-effector pose straight
           to the object-to-camera pose
"""
from typing import Optional, Sequence

import numpy as np
import torch
from torch import nn

from graspalign.core.config import CoordAlignOptions, RegressorOptions
from graspalign.core.errors import InputError
from graspalign.core.logging import logger
from graspalign.models.alignment import AlignmentProblem, AlignmentSolution, CameraObjectPose
from graspalign.models.geometry import Rotation3, Transform3
from graspalign.models.regressor import ARCHITECTURE, RegressorParams
from graspalign.services import autodiff
from graspalign.services.coord_align import CoordinateAlignmentService, Objective, ProblemTensors
from graspalign.services.optim import ParamGroup, run_adam


class DirectRegressor(nn.Module):
    """12 -> 64 -> 64 -> 12 with tanh activations."""

    def __init__(self):
        super().__init__()
        hidden = ARCHITECTURE[1]
        self.net = nn.Sequential(
            nn.Linear(ARCHITECTURE[0], hidden),
            nn.Tanh(),
            nn.Linear(hidden, hidden),
            nn.Tanh(),
            nn.Linear(hidden, ARCHITECTURE[-1]),
        ).to(autodiff.DTYPE)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


def flatten_pose(t: Transform3) -> np.ndarray:
    """Rotation block (row-major, 9) followed by translation (3)."""
    return np.concatenate([t.R.reshape(-1), t.t])


def _decode(raw: torch.Tensor, mean: torch.Tensor, scale: torch.Tensor) -> torch.Tensor:
    out = raw * scale + mean
    rot = autodiff.procrustes(out[..., :9].reshape(out.shape[:-1] + (3, 3)))
    return autodiff.make_transform(rot, out[..., 9:])


def _norm_stats(x: np.ndarray):
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale = np.where(scale < 1e-8, 1.0, scale)
    return mean, scale


class BaselineService:
    """Service class for the comparison methods."""

    @staticmethod
    def se3_objective(data: ProblemTensors, rot_weight: float, mean: str) -> Objective:
        def parts(rot_raw, trans, log_alpha):
            alpha = torch.exp(log_alpha)
            rot_f, t_f, _ = CoordinateAlignmentService.estimator_tensor(
                autodiff.procrustes(rot_raw), trans, alpha, data, mean
            )
            rel = rot_f.transpose(-1, -2) @ data.R
            return rel, t_f - alpha * data.t

        def loss(rot_raw, trans, log_alpha):
            rel, dt = parts(rot_raw, trans, log_alpha)
            dist = rot_weight * autodiff.rotation_angle(rel) + torch.linalg.vector_norm(dt, dim=-1)
            return dist.mean()

        def residuals(rot_raw, trans, log_alpha):
            rel, dt = parts(rot_raw, trans, log_alpha)
            return torch.cat([rot_weight * autodiff.so3_log(rel), dt], dim=-1).reshape(-1)

        return Objective(loss=loss, residuals=residuals)

    @staticmethod
    def solve_no_render(problem: AlignmentProblem, opts: Optional[CoordAlignOptions] = None) -> AlignmentSolution:
        """
        Recover H and alpha by minimizing SE(3) distances instead of pixels.

        Args:
            problem: The same AlignmentProblem the rendered solver consumes
            opts: Solver options (rot_weight sets metres per radian)

        Returns:
            AlignmentSolution; residuals are still reported in pixels
        """
        opts = opts or CoordAlignOptions()
        if problem.n_poses < 2:
            raise InputError("solve needs at least 2 poses")
        data = CoordinateAlignmentService.prepare(problem, opts.depth_epsilon, opts.render_subsample)
        objective = BaselineService.se3_objective(data, opts.rot_weight, opts.mean)
        H, alpha, start_losses, iterations, converged = CoordinateAlignmentService.run_starts(
            problem, objective, opts, "no-render"
        )
        return CoordinateAlignmentService.finish(problem, H, alpha, start_losses, iterations, converged, "no-render", opts)

    @staticmethod
    def train_direct(
        ee_poses: Sequence[Transform3],
        cam_obj_poses: Sequence[CameraObjectPose],
        opts: Optional[RegressorOptions] = None,
    ) -> RegressorParams:
        """
        Fit the direct regressor by full-batch Adam on the mean SE(3) distance.

        Args:
            ee_poses: Training end-effector poses
            cam_obj_poses: Matching object-to-camera poses (gauge units)
            opts: Step, epochs, seed and rotation weight

        Returns:
            Trained RegressorParams
        """
        opts = opts or RegressorOptions()
        if len(ee_poses) != len(cam_obj_poses):
            raise InputError(f"{len(ee_poses)} inputs for {len(cam_obj_poses)} targets")
        if len(ee_poses) < 1:
            raise InputError("direct regression needs at least one training pair")
        if len(ee_poses) < 2:
            logger.warning("Training the direct regressor on a single pair")

        x = np.stack([flatten_pose(e) for e in ee_poses])
        y = np.stack([flatten_pose(p.as_transform()) for p in cam_obj_poses])
        in_mean, in_scale = _norm_stats(x)
        out_mean, out_scale = _norm_stats(y)

        with torch.random.fork_rng():
            torch.manual_seed(opts.seed)
            model = DirectRegressor()

        inputs = autodiff.as_tensor((x - in_mean) / in_scale)
        target = autodiff.as_tensor(np.stack([p.as_transform().matrix for p in cam_obj_poses]))
        om, osc = autodiff.as_tensor(out_mean), autodiff.as_tensor(out_scale)

        def objective():
            pred = _decode(model(inputs), om, osc)
            return autodiff.se3_distance(pred, target, opts.rot_weight).mean()

        result = run_adam(
            [ParamGroup(list(model.parameters()), opts.step, "regressor")],
            objective,
            max_iters=opts.epochs,
            cosine_decay=False,
            converge_tol=1e-10,
            patience=200,
            label="train_direct",
        )
        logger.info(f"train_direct: loss {result.loss:.6g} after {result.iterations} epochs")

        linears = [m for m in model.net if isinstance(m, nn.Linear)]
        return RegressorParams(
            layers=[(l.weight.detach().numpy().copy(), l.bias.detach().numpy().copy()) for l in linears],
            input_mean=in_mean,
            input_scale=in_scale,
            output_mean=out_mean,
            output_scale=out_scale,
        )

    @staticmethod
    def predict_direct(params: RegressorParams, ee_pose: Transform3) -> Transform3:
        """Forward pass; the rotation block is projected onto SO(3)."""
        h = autodiff.as_tensor((flatten_pose(ee_pose) - params.input_mean) / params.input_scale)
        n_layers = len(params.layers)
        with torch.no_grad():
            for k, (w, b) in enumerate(params.layers):
                h = h @ autodiff.as_tensor(w).T + autodiff.as_tensor(b)
                if k < n_layers - 1:
                    h = torch.tanh(h)
            T = _decode(h, autodiff.as_tensor(params.output_mean), autodiff.as_tensor(params.output_scale))
        m = T.detach().numpy()
        return Transform3(Rotation3(m[:3, :3]), m[:3, 3])
