"""
Geometric value types shared by every service.

All types are frozen dataclasses over read-only numpy arrays, so they can be
copied and handed between threads freely.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from graspalign.core.errors import InputError, NotProjectableError

ORTHO_TOL = 1e-9
REPROJECT_TOL = 1e-6


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def nearest_rotation(m: np.ndarray) -> np.ndarray:
    """Frobenius-nearest rotation matrix via SVD with determinant correction."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise NotProjectableError("rotation block must be a finite 3x3 matrix")
    u, s, vt = np.linalg.svd(m)
    if s[1] <= 1e-12 * max(s[0], 1.0):
        raise NotProjectableError(f"matrix has rank < 2 (singular values {s.tolist()}); cannot project onto SO(3)")
    d = np.sign(np.linalg.det(u @ vt))
    if d == 0:
        d = 1.0
    return u @ np.diag([1.0, 1.0, d]) @ vt


@dataclass(frozen=True, eq=False)
class Rotation3:
    """Proper rotation, stored as a full 3x3 matrix."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise InputError(f"Rotation3 needs a finite 3x3 matrix, got shape {m.shape}")
        ortho_err = np.max(np.abs(m.T @ m - np.eye(3)))
        det_err = abs(np.linalg.det(m) - 1.0)
        if ortho_err > ORTHO_TOL or det_err > ORTHO_TOL:
            if ortho_err > REPROJECT_TOL or det_err > REPROJECT_TOL:
                raise InputError(
                    f"matrix is not a rotation (orthogonality error {ortho_err:.3g}, det error {det_err:.3g})"
                )
            m = nearest_rotation(m)
        object.__setattr__(self, "m", _frozen(m))

    @classmethod
    def identity(cls) -> "Rotation3":
        return cls(np.eye(3))

    @classmethod
    def about_axis(cls, axis: Sequence[float], angle: float) -> "Rotation3":
        """Rodrigues rotation of `angle` radians about `axis`."""
        a = np.asarray(axis, dtype=np.float64)
        norm = np.linalg.norm(a)
        if norm == 0:
            raise InputError("rotation axis must be nonzero")
        a = a / norm
        k = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
        return cls(np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k))

    def angle_to(self, other: "Rotation3") -> float:
        """Geodesic angle between two rotations (radians)."""
        c = (np.trace(self.m.T @ other.m) - 1.0) / 2.0
        return float(np.arccos(np.clip(c, -1.0, 1.0)))


@dataclass(frozen=True, eq=False)
class Transform3:
    """Rigid SE(3) transform in the 4x4 column convention."""

    rotation: Rotation3 = field(default_factory=Rotation3.identity)
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not isinstance(self.rotation, Rotation3):
            object.__setattr__(self, "rotation", Rotation3(self.rotation))
        t = np.asarray(self.translation, dtype=np.float64).reshape(-1)
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise InputError(f"translation must be a finite 3-vector, got {t}")
        object.__setattr__(self, "translation", _frozen(t))

    @property
    def R(self) -> np.ndarray:
        return self.rotation.m

    @property
    def t(self) -> np.ndarray:
        return self.translation

    @property
    def matrix(self) -> np.ndarray:
        out = np.eye(4)
        out[:3, :3] = self.rotation.m
        out[:3, 3] = self.translation
        return out

    @classmethod
    def identity(cls) -> "Transform3":
        return cls()

    @classmethod
    def from_matrix(cls, matrix) -> "Transform3":
        mat = np.asarray(matrix, dtype=np.float64)
        if mat.size == 16:
            mat = mat.reshape(4, 4)
        if mat.shape != (4, 4):
            raise InputError(f"homogeneous transform must be 4x4, got shape {mat.shape}")
        if not np.allclose(mat[3], [0.0, 0.0, 0.0, 1.0], atol=1e-12):
            raise InputError(f"homogeneous transform bottom row must be (0,0,0,1), got {mat[3].tolist()}")
        return cls(Rotation3(mat[:3, :3]), mat[:3, 3])

    @classmethod
    def from_translation(cls, t: Sequence[float]) -> "Transform3":
        return cls(Rotation3.identity(), np.asarray(t, dtype=np.float64))

    def inverse(self) -> "Transform3":
        rt = self.rotation.m.T
        return Transform3(Rotation3(rt), -rt @ self.translation)

    def to_json(self) -> Dict[str, List[float]]:
        return {"matrix": [float(v) for v in self.matrix.reshape(-1)]}

    @classmethod
    def from_json(cls, data) -> "Transform3":
        if isinstance(data, dict):
            data = data.get("matrix")
        if data is None or len(data) != 16:
            raise InputError("transform JSON must carry a 16-element row-major 'matrix'")
        return cls.from_matrix(np.asarray(data, dtype=np.float64))


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise InputError(f"intrinsic {name} must be finite")
            object.__setattr__(self, name, value)
        if self.fx <= 0 or self.fy <= 0:
            raise InputError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def to_json(self) -> Dict[str, float]:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}

    @classmethod
    def from_json(cls, data: Dict[str, float]) -> "Intrinsics":
        try:
            return cls(fx=data["fx"], fy=data["fy"], cx=data["cx"], cy=data["cy"])
        except KeyError as e:
            raise InputError(f"intrinsics missing key {e}") from e


@dataclass(frozen=True, eq=False)
class DenseCloud:
    """Row batch of 3D points with optional per-point confidence."""

    points: np.ndarray
    confidence: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1 and pts.size == 3:
            pts = pts.reshape(1, 3)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise InputError(f"dense cloud must be a nonempty N x 3 array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("dense cloud coordinates must be finite")
        object.__setattr__(self, "points", _frozen(pts))
        if self.confidence is not None:
            conf = np.asarray(self.confidence, dtype=np.float64).reshape(-1)
            if conf.shape[0] != pts.shape[0]:
                raise InputError(f"confidence length {conf.shape[0]} does not match {pts.shape[0]} points")
            if np.any(conf < 0) or not np.all(np.isfinite(conf)):
                raise InputError("confidence must be finite and nonnegative")
            object.__setattr__(self, "confidence", _frozen(conf))

    def __len__(self) -> int:
        return self.points.shape[0]

    def subsample(self, step: int) -> "DenseCloud":
        """Every `step`-th point, starting with the first."""
        if step <= 1:
            return self
        conf = None if self.confidence is None else self.confidence[::step]
        return DenseCloud(self.points[::step], conf)

    def scaled(self, factor: float) -> "DenseCloud":
        return DenseCloud(self.points * factor, self.confidence)


@dataclass(frozen=True, eq=False)
class PixelSet:
    """M x 2 continuous pixel coordinates (u, v)."""

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim == 1 and p.size == 2:
            p = p.reshape(1, 2)
        if p.ndim != 2 or p.shape[1] != 2:
            raise InputError(f"pixel set must be an M x 2 array, got shape {p.shape}")
        if p.shape[0] < 1:
            raise InputError("pixel set is empty")
        if not np.all(np.isfinite(p)):
            raise InputError("pixel coordinates must be finite")
        object.__setattr__(self, "points", _frozen(p))

    def __len__(self) -> int:
        return self.points.shape[0]
