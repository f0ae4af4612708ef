"""
Rigid-transform algebra.

Points are row batches; `apply_points` is the right-multiplication shorthand
Y T^T := {[Y, 1] T^T}[:, :3] over the usual 4x4 column convention.
"""
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from graspalign.core.errors import InputError
from graspalign.models.geometry import DenseCloud, Rotation3, Transform3, nearest_rotation


def compose(a: Transform3, b: Transform3) -> Transform3:
    """Homogeneous product a @ b."""
    return Transform3(Rotation3(a.R @ b.R), a.R @ b.t + a.t)


def inverse(t: Transform3) -> Transform3:
    return t.inverse()


def compose_all(transforms: Iterable[Transform3]) -> Transform3:
    out = Transform3.identity()
    for t in transforms:
        out = compose(out, t)
    return out


def apply_points(cloud, T: Transform3):
    """Transform a row batch of points by T; confidence is carried through.

    Accepts a DenseCloud (returns a DenseCloud) or an N x 3 array (returns an array).
    """
    if isinstance(cloud, DenseCloud):
        homo = np.hstack([cloud.points, np.ones((len(cloud), 1))])
        return DenseCloud((homo @ T.matrix.T)[:, :3], cloud.confidence)
    pts = np.asarray(cloud, dtype=np.float64)
    squeeze = pts.ndim == 1
    pts = pts.reshape(-1, 3)
    out = pts @ T.R.T + T.t
    return out[0] if squeeze else out


def procrustes_project(m: np.ndarray) -> Rotation3:
    """argmin over R in SO(3) of ||R - m||_F."""
    return Rotation3(nearest_rotation(m))


def geodesic_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Angle of a^T b in [0, pi], atan2 form (exact at zero)."""
    rel = np.asarray(a).T @ np.asarray(b)
    skew = rel - rel.T
    sin = 0.5 * np.linalg.norm([skew[2, 1], skew[0, 2], skew[1, 0]])
    cos = 0.5 * (np.trace(rel) - 1.0)
    return float(np.arctan2(sin, cos))


def se3_distance(a: Transform3, b: Transform3, rot_weight: float = 1.0) -> float:
    """rot_weight * geodesic angle + translation distance."""
    if rot_weight <= 0:
        raise InputError(f"rot_weight must be positive, got {rot_weight}")
    return rot_weight * geodesic_angle(a.R, b.R) + float(np.linalg.norm(a.t - b.t))


def mean_transform(transforms: Sequence[Transform3]) -> Tuple[Transform3, float]:
    """Arithmetic mean of 4x4 matrices followed by Procrustes.

    Returns the mean and the spread: the largest se3_distance from any member
    to the mean.
    """
    if len(transforms) == 0:
        raise InputError("cannot average an empty list of transforms")
    mats = np.stack([t.matrix for t in transforms])
    mean = mats.mean(axis=0)
    avg = Transform3(procrustes_project(mean[:3, :3]), mean[:3, 3])
    spread = max(se3_distance(avg, t, 1.0) for t in transforms)
    return avg, float(spread)


def scaled_translation(t: Transform3, factor: float) -> Transform3:
    return Transform3(t.rotation, t.t * factor)


def rot_z(angle: float) -> Rotation3:
    return Rotation3.about_axis([0.0, 0.0, 1.0], angle)


def from_rotvec(rotvec: Sequence[float], translation: Optional[Sequence[float]] = None) -> Transform3:
    """Exponential map of a rotation vector (translation passed through)."""
    t = np.zeros(3) if translation is None else np.asarray(translation, dtype=np.float64)
    return Transform3(Rotation3(Rotation.from_rotvec(np.asarray(rotvec, dtype=np.float64)).as_matrix()), t)


def to_rotvec(r: Rotation3) -> np.ndarray:
    return Rotation.from_matrix(r.m).as_rotvec()


def random_transform(rng: np.random.Generator, trans_scale: float = 1.0) -> Transform3:
    """Uniform random rotation with Gaussian translation."""
    rot = Rotation.random(random_state=rng).as_matrix()
    return Transform3(Rotation3(rot), rng.normal(scale=trans_scale, size=3))


def umeyama(src: np.ndarray, dst: np.ndarray, weights: Optional[np.ndarray] = None,
            with_scale: bool = True) -> Tuple[float, np.ndarray, np.ndarray]:
    """Weighted similarity fit c, R, t with c R src + t ~ dst (rows are points)."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 3:
        raise InputError(f"umeyama needs matching N x 3 arrays, got {src.shape} and {dst.shape}")
    w = np.ones(src.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.sum() <= 0:
        raise InputError("umeyama needs positive total weight")
    w = w / w.sum()
    mu_s = w @ src
    mu_d = w @ dst
    xs = src - mu_s
    xd = dst - mu_d
    cov = (xd * w[:, None]).T @ xs
    u, d, vt = np.linalg.svd(cov)
    s = np.eye(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        s[2, 2] = -1.0
    r = u @ s @ vt
    if with_scale:
        var_s = float(w @ np.sum(xs ** 2, axis=1))
        c = float(np.trace(np.diag(d) @ s) / var_s) if var_s > 0 else 1.0
    else:
        c = 1.0
    t = mu_d - c * r @ mu_s
    return c, r, t
