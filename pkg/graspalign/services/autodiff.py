"""
Differentiable geometry in torch (float64).

The Procrustes projection has a hand-written backward: the SVD backward built
into torch divides by differences of singular values and returns NaN whenever
two of them coincide, which is the common case near a rotation matrix.
"""
from typing import Optional

import numpy as np
import torch

from graspalign.core.errors import BehindCameraError
from graspalign.models.geometry import Intrinsics, Transform3

DTYPE = torch.float64
DENOM_EPS = 1e-12


def as_tensor(a, requires_grad: bool = False) -> torch.Tensor:
    t = torch.as_tensor(np.asarray(a, dtype=np.float64), dtype=DTYPE).clone()
    t.requires_grad_(requires_grad)
    return t


def transform_tensor(t: Transform3) -> torch.Tensor:
    return as_tensor(t.matrix)


class ProcrustesFunction(torch.autograd.Function):
    """Nearest rotation R = U diag(1, 1, det(U V^T)) V^T of a (batched) 3x3 matrix."""

    @staticmethod
    def forward(ctx, m: torch.Tensor) -> torch.Tensor:
        u, s, vh = torch.linalg.svd(m)
        det = torch.linalg.det(u @ vh)
        d = torch.ones_like(s)
        d[..., 2] = torch.where(det < 0, -torch.ones_like(det), torch.ones_like(det))
        r = u @ torch.diag_embed(d) @ vh
        ctx.save_for_backward(r, vh, s * d)
        return r

    @staticmethod
    def backward(ctx, grad_r: torch.Tensor) -> torch.Tensor:
        r, vh, lam = ctx.saved_tensors
        v = vh.transpose(-1, -2)
        b = vh @ r.transpose(-1, -2) @ grad_r @ v
        denom = lam.unsqueeze(-1) + lam.unsqueeze(-2)
        sign = torch.where(denom < 0, -torch.ones_like(denom), torch.ones_like(denom))
        denom = sign * denom.abs().clamp_min(DENOM_EPS)
        eye = torch.eye(3, dtype=grad_r.dtype, device=grad_r.device)
        denom = torch.where(eye.bool(), torch.ones_like(denom), denom)
        omega = (b - b.transpose(-1, -2)) / denom
        return r @ v @ omega @ vh


def procrustes(m: torch.Tensor) -> torch.Tensor:
    return ProcrustesFunction.apply(m)


def make_transform(rot: torch.Tensor, trans: torch.Tensor) -> torch.Tensor:
    """Assemble (batched) 4x4 homogeneous matrices from rotation blocks and translations."""
    top = torch.cat([rot, trans.unsqueeze(-1)], dim=-1)
    bottom = torch.zeros(top.shape[:-2] + (1, 4), dtype=top.dtype)
    bottom[..., 0, 3] = 1.0
    return torch.cat([top, bottom], dim=-2)


def invert(T: torch.Tensor) -> torch.Tensor:
    rt = T[..., :3, :3].transpose(-1, -2)
    return make_transform(rt, -(rt @ T[..., :3, 3:4]).squeeze(-1))


def apply(T: torch.Tensor, pts: torch.Tensor) -> torch.Tensor:
    """Row-batch shorthand: pts (..., N, 3) transformed by T (..., 4, 4)."""
    return pts @ T[..., :3, :3].transpose(-1, -2) + T[..., :3, 3].unsqueeze(-2)


def skew(w: torch.Tensor) -> torch.Tensor:
    zero = torch.zeros_like(w[..., 0])
    return torch.stack([
        torch.stack([zero, -w[..., 2], w[..., 1]], dim=-1),
        torch.stack([w[..., 2], zero, -w[..., 0]], dim=-1),
        torch.stack([-w[..., 1], w[..., 0], zero], dim=-1),
    ], dim=-2)


def vee(m: torch.Tensor) -> torch.Tensor:
    return torch.stack([m[..., 2, 1], m[..., 0, 2], m[..., 1, 0]], dim=-1)


def rotation_angle(rel: torch.Tensor) -> torch.Tensor:
    """Geodesic angle of a relative rotation, atan2 form (finite gradient at 0 and pi)."""
    sin = 0.5 * torch.linalg.vector_norm(vee(rel - rel.transpose(-1, -2)), dim=-1)
    cos = 0.5 * (rel.diagonal(dim1=-2, dim2=-1).sum(-1) - 1.0)
    return torch.atan2(sin, cos)


def se3_distance(a: torch.Tensor, b: torch.Tensor, rot_weight: float = 1.0) -> torch.Tensor:
    rel = a[..., :3, :3].transpose(-1, -2) @ b[..., :3, :3]
    return rot_weight * rotation_angle(rel) + torch.linalg.vector_norm(a[..., :3, 3] - b[..., :3, 3], dim=-1)


def so3_exp(w: torch.Tensor) -> torch.Tensor:
    theta2 = (w * w).sum(-1, keepdim=True).unsqueeze(-1)
    small = theta2 < 1e-12
    theta = torch.sqrt(torch.where(small, torch.ones_like(theta2), theta2))
    a = torch.where(small, 1.0 - theta2 / 6.0, torch.sin(theta) / theta)
    b = torch.where(small, 0.5 - theta2 / 24.0, (1.0 - torch.cos(theta)) / (theta * theta))
    k = skew(w)
    eye = torch.eye(3, dtype=w.dtype).expand_as(k)
    return eye + a * k + b * (k @ k)


def so3_log(r: torch.Tensor) -> torch.Tensor:
    """Rotation vector of r; valid away from angle pi."""
    theta = rotation_angle(r).unsqueeze(-1)
    small = theta < 1e-6
    safe = torch.where(small, torch.ones_like(theta), theta)
    factor = torch.where(small, 0.5 + theta * theta / 12.0, safe / (2.0 * torch.sin(safe)))
    return factor * vee(r - r.transpose(-1, -2))


def rotation_log_mean(rots: torch.Tensor) -> torch.Tensor:
    """Mean of rotations (K, 3, 3) in the tangent space at the first one."""
    base = rots[0]
    tangent = so3_log(base.transpose(-1, -2) @ rots).mean(dim=0)
    return base @ so3_exp(tangent)


def project(K: Intrinsics, pts: torch.Tensor, depth_epsilon: float = 1e-6, clamp: bool = False,
            pose_index: Optional[int] = None) -> torch.Tensor:
    """Perspective projection of row-batched camera-frame points to (u, v) pixels.

    With clamp=True depths are floored at depth_epsilon instead of raising; the
    solvers use that form so a wild trial step cannot abort the run.
    """
    z = pts[..., 2]
    if clamp:
        z = z.clamp_min(depth_epsilon)
    else:
        bad = (z <= depth_epsilon).nonzero()
        if bad.numel() > 0:
            first = tuple(int(i) for i in bad[0])
            idx = first[-1]
            if pose_index is None and len(first) > 1:
                pose_index = first[0]
            raise BehindCameraError(
                f"point {idx} has depth {float(z[first]):.3g} <= {depth_epsilon:g}"
                + (f" at pose {pose_index}" if pose_index is not None else ""),
                pose_index=pose_index,
                point_index=idx,
            )
    u = K.fx * pts[..., 0] / z + K.cx
    v = K.fy * pts[..., 1] / z + K.cy
    return torch.stack([u, v], dim=-1)
