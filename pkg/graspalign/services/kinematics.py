"""
Service layer for mappings between joint configurations and points on the held object.

    psi(q)     = X' ((fk(q) H)^-1)^T        object points in the base frame
    psi^-1     object pose request -> end-effector target -> ik
"""
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial.transform import Rotation

from graspalign.core.config import IKOptions
from graspalign.core.errors import IKError, InputError
from graspalign.core.logging import logger
from graspalign.models.geometry import Rotation3, Transform3
from graspalign.models.kinematics import ChainSpec, Configuration, JointSpec, PointsOfInterest
from graspalign.services.se3 import apply_points, compose, se3_distance, umeyama

QLike = Union[Configuration, Sequence[float], np.ndarray]


def _q(chain: ChainSpec, q: QLike) -> np.ndarray:
    arr = q.q if isinstance(q, Configuration) else np.asarray(q, dtype=np.float64).reshape(-1)
    if arr.shape[0] != chain.dof:
        raise InputError(f"configuration has {arr.shape[0]} joints, chain '{chain.name}' has {chain.dof}")
    if not np.all(np.isfinite(arr)):
        raise InputError("configuration must be finite")
    return arr


def _translation(x: float, y: float, z: float) -> Transform3:
    return Transform3.from_translation([x, y, z])


class KinematicsService:
    """Service class for forward/inverse kinematics of the held object."""

    @staticmethod
    def joint_motion(joint: JointSpec, value: float) -> Transform3:
        if joint.type == "revolute":
            return Transform3(Rotation3.about_axis(joint.axis, value), np.zeros(3))
        return Transform3.from_translation(value * joint.axis)

    @staticmethod
    def fk(chain: ChainSpec, q: QLike) -> Transform3:
        """
        Forward kinematics.

        Args:
            chain: Serial chain
            q: Joint vector

        Returns:
            Product of parent_offset * motion(q_i) over joints, times tip_offset
        """
        qv = _q(chain, q)
        T = Transform3.identity()
        for joint, value in zip(chain.joints, qv):
            T = compose(compose(T, joint.parent_offset), KinematicsService.joint_motion(joint, value))
        return compose(T, chain.tip_offset)

    @staticmethod
    def jacobian(chain: ChainSpec, q: QLike) -> np.ndarray:
        """Geometric 6 x d Jacobian of the tip in the base frame, linear rows first."""
        qv = _q(chain, q)
        T = Transform3.identity()
        axes, origins = [], []
        for joint, value in zip(chain.joints, qv):
            T = compose(T, joint.parent_offset)
            axes.append(T.R @ joint.axis)
            origins.append(T.t.copy())
            T = compose(T, KinematicsService.joint_motion(joint, value))
        tip = compose(T, chain.tip_offset).t
        J = np.zeros((6, chain.dof))
        for i, joint in enumerate(chain.joints):
            if joint.type == "revolute":
                J[:3, i] = np.cross(axes[i], tip - origins[i])
                J[3:, i] = axes[i]
            else:
                J[:3, i] = axes[i]
        return J

    @staticmethod
    def pose_error(current: Transform3, target: Transform3) -> np.ndarray:
        """Translation difference and rotation vector of target * current^-1, both in the base frame."""
        dr = Rotation.from_matrix(target.R @ current.R.T).as_rotvec()
        return np.concatenate([target.t - current.t, dr])

    @staticmethod
    def ik(chain: ChainSpec, target: Transform3, q0: QLike, opts: Optional[IKOptions] = None) -> Configuration:
        """
        Damped least-squares inverse kinematics (Levenberg-Marquardt damping schedule).

        Args:
            chain: Serial chain
            target: Desired tip pose
            q0: Start configuration
            opts: Tolerance, damping and step limits

        Returns:
            Configuration with se3_distance(fk(q), target) < opts.tol
        """
        opts = opts or IKOptions()
        q = np.clip(_q(chain, q0).copy(), chain.lower, chain.upper)
        current = KinematicsService.fk(chain, q)
        residual = se3_distance(current, target, 1.0)
        if residual < opts.tol:
            return Configuration(q)

        base_dist = float(np.linalg.norm(target.t))
        if base_dist > chain.reach():
            raise IKError(
                f"target at distance {base_dist:.4g} m is beyond the chain reach {chain.reach():.4g} m",
                residual=residual,
                q_best=q,
            )

        lam = opts.damping
        rejections = 0
        e = KinematicsService.pose_error(current, target)
        for iteration in range(1, opts.max_iters + 1):
            J = KinematicsService.jacobian(chain, q)
            dq = np.linalg.solve(J.T @ J + lam * np.eye(chain.dof), J.T @ e)
            dq = np.clip(dq, -opts.step_clamp, opts.step_clamp)
            q_new = np.clip(q + dq, chain.lower, chain.upper)
            trial = KinematicsService.fk(chain, q_new)
            e_new = KinematicsService.pose_error(trial, target)
            if np.linalg.norm(e_new) < np.linalg.norm(e):
                q, e, current = q_new, e_new, trial
                lam /= 2
                rejections = 0
                residual = se3_distance(current, target, 1.0)
                if residual < opts.tol:
                    logger.debug(f"ik converged in {iteration} iterations, residual {residual:.3g}")
                    return Configuration(q)
            else:
                lam *= 2
                rejections += 1
                if rejections > opts.max_rejections:
                    break

        raise IKError(
            f"inverse kinematics did not converge (best residual {residual:.3g}, tolerance {opts.tol:g})",
            residual=residual,
            q_best=q,
        )

    @staticmethod
    def object_pose(chain: ChainSpec, q: QLike, H: Transform3) -> Transform3:
        """Object pose in the base frame, (fk(q) H)^-1."""
        return compose(KinematicsService.fk(chain, q), H).inverse()

    @staticmethod
    def psi(chain: ChainSpec, q: QLike, H: Transform3, poi: PointsOfInterest) -> np.ndarray:
        """Points of interest in the base frame at configuration q."""
        return apply_points(poi.points, KinematicsService.object_pose(chain, q, H))

    @staticmethod
    def psi_inverse(
        chain: ChainSpec, object_pose_in_base: Transform3, H: Transform3, q0: QLike, opts: Optional[IKOptions] = None
    ) -> Configuration:
        """
        Configuration that puts the held object at the requested pose.

        Args:
            chain: Serial chain
            object_pose_in_base: Requested object pose (as returned by object_pose)
            H: End-effector/object transform
            q0: Start configuration
            opts: IK options

        Returns:
            Configuration q with object_pose(q) matching the request
        """
        target = compose(object_pose_in_base.inverse(), H.inverse())
        return KinematicsService.ik(chain, target, q0, opts)

    @staticmethod
    def psi_inverse_points(
        chain: ChainSpec, poi: PointsOfInterest, target_points: np.ndarray, H: Transform3, q0: QLike,
        opts: Optional[IKOptions] = None,
    ) -> Configuration:
        """Point request variant: a rigid least-squares fit from X' to the requested points gives the object pose."""
        target_points = np.asarray(target_points, dtype=np.float64).reshape(-1, 3)
        if target_points.shape != poi.points.shape:
            raise InputError(f"{target_points.shape[0]} target points for {poi.points.shape[0]} points of interest")
        if poi.points.shape[0] < 3:
            raise InputError("a point request needs at least 3 points to fix the object orientation")
        _, rot, trans = umeyama(poi.points, target_points, with_scale=False)
        return KinematicsService.psi_inverse(chain, Transform3(Rotation3(rot), trans), H, q0, opts)

    @staticmethod
    def pivot_goal(current_object_pose: Transform3, pivot: Sequence[float], axis: Sequence[float], angle: float) -> Transform3:
        """
        Rotate the object pose about a line through a point on the object.

        Args:
            current_object_pose: Object pose in the base frame
            pivot: Pivot point in object coordinates
            axis: Unit rotation axis in the base frame
            angle: Rotation angle (radians)

        Returns:
            New object pose; the pivot's base-frame position is unchanged
        """
        a = np.asarray(axis, dtype=np.float64)
        if abs(np.linalg.norm(a) - 1.0) > 1e-9:
            raise InputError(f"pivot axis must have unit norm, got |axis| = {np.linalg.norm(a):.12g}")
        c = apply_points(np.asarray(pivot, dtype=np.float64), current_object_pose)
        rot = Rotation3.about_axis(a, angle)
        line = Transform3(rot, c - rot.m @ c)
        return compose(line, current_object_pose)

    @staticmethod
    def planar2(link1: float = 1.0, link2: float = 1.0) -> ChainSpec:
        """Two revolute z joints in the xy-plane."""
        z = np.array([0.0, 0.0, 1.0])
        return ChainSpec(
            joints=[
                JointSpec("revolute", Transform3.identity(), z, (-np.pi, np.pi)),
                JointSpec("revolute", _translation(link1, 0, 0), z, (-np.pi, np.pi)),
            ],
            tip_offset=_translation(link2, 0, 0),
            name="planar2",
        )

    @staticmethod
    def desk6r() -> ChainSpec:
        """Generic six-revolute desk arm (about 0.6 m reach upward, 0.48 m forward)."""
        x, y, z = np.eye(3)
        wide = (-np.pi, np.pi)
        bend = (-2.6, 2.6)
        return ChainSpec(
            joints=[
                JointSpec("revolute", _translation(0, 0, 0.10), z, wide),
                JointSpec("revolute", _translation(0, 0, 0.15), y, bend),
                JointSpec("revolute", _translation(0, 0, 0.35), y, bend),
                JointSpec("revolute", _translation(0.30, 0, 0), x, wide),
                JointSpec("revolute", _translation(0.05, 0, 0), y, bend),
                JointSpec("revolute", _translation(0.05, 0, 0), x, wide),
            ],
            tip_offset=_translation(0.08, 0, 0),
            name="desk6r",
        )

    @staticmethod
    def builtin(name: str) -> ChainSpec:
        chains = {"planar2": KinematicsService.planar2, "desk6r": KinematicsService.desk6r}
        if name not in chains:
            raise InputError(f"unknown chain {name!r}; built-in chains are {sorted(chains)}")
        return chains[name]()
