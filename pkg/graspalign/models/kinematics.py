"""
Serial-chain description, joint configurations and tracked object points.
"""
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Tuple

import numpy as np

from graspalign.core.errors import InputError
from graspalign.models.geometry import Transform3, _frozen

MAX_JOINTS = 12


@dataclass(frozen=True, eq=False)
class JointSpec:
    type: Literal["revolute", "prismatic"]
    parent_offset: Transform3
    axis: np.ndarray
    limits: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.type not in ("revolute", "prismatic"):
            raise InputError(f"joint type must be revolute or prismatic, got {self.type!r}")
        a = np.asarray(self.axis, dtype=np.float64).reshape(-1)
        if a.shape != (3,) or not np.all(np.isfinite(a)):
            raise InputError(f"joint axis must be a finite 3-vector, got {a}")
        if abs(np.linalg.norm(a) - 1.0) > 1e-9:
            raise InputError(f"joint axis must have unit norm, got |axis| = {np.linalg.norm(a):.12g}")
        object.__setattr__(self, "axis", _frozen(a))
        if self.limits is not None:
            lo, hi = (float(v) for v in self.limits)
            if not lo < hi:
                raise InputError(f"joint limits must satisfy lo < hi, got ({lo}, {hi})")
            object.__setattr__(self, "limits", (lo, hi))

    def to_json(self) -> dict:
        out = {"type": self.type, "parent_offset": self.parent_offset.to_json()["matrix"],
               "axis": [float(v) for v in self.axis]}
        if self.limits is not None:
            out["limits"] = list(self.limits)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "JointSpec":
        try:
            return cls(
                type=data["type"],
                parent_offset=Transform3.from_json(data["parent_offset"]),
                axis=np.asarray(data["axis"], dtype=np.float64),
                limits=tuple(data["limits"]) if data.get("limits") is not None else None,
            )
        except KeyError as e:
            raise InputError(f"joint JSON missing key {e}") from e


@dataclass(frozen=True, eq=False)
class ChainSpec:
    joints: List[JointSpec]
    tip_offset: Transform3 = field(default_factory=Transform3.identity)
    name: str = "custom"

    def __post_init__(self):
        if not 1 <= len(self.joints) <= MAX_JOINTS:
            raise InputError(f"chain must have between 1 and {MAX_JOINTS} joints, got {len(self.joints)}")
        object.__setattr__(self, "joints", list(self.joints))

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def lower(self) -> np.ndarray:
        return np.array([j.limits[0] if j.limits else -np.inf for j in self.joints])

    @property
    def upper(self) -> np.ndarray:
        return np.array([j.limits[1] if j.limits else np.inf for j in self.joints])

    def reach(self) -> float:
        """Upper bound on the distance from the base to the tip."""
        total = sum(float(np.linalg.norm(j.parent_offset.t)) for j in self.joints)
        total += float(np.linalg.norm(self.tip_offset.t))
        for j in self.joints:
            if j.type == "prismatic":
                lo, hi = j.limits if j.limits else (-np.inf, np.inf)
                total += max(abs(lo), abs(hi))
        return total

    def to_json(self) -> dict:
        return {"name": self.name, "joints": [j.to_json() for j in self.joints],
                "tip_offset": self.tip_offset.to_json()["matrix"]}

    @classmethod
    def from_json(cls, data: dict) -> "ChainSpec":
        if "joints" not in data:
            raise InputError("chain JSON must contain 'joints'")
        tip = Transform3.from_json(data["tip_offset"]) if "tip_offset" in data else Transform3.identity()
        return cls([JointSpec.from_json(j) for j in data["joints"]], tip, data.get("name", "custom"))


@dataclass(frozen=True, eq=False)
class Configuration:
    """Joint vector q (radians for revolute joints, metres for prismatic)."""

    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(q)):
            raise InputError("configuration must be finite")
        object.__setattr__(self, "q", _frozen(q))

    def __len__(self) -> int:
        return self.q.shape[0]

    def check_limits(self, chain: ChainSpec, tol: float = 1e-12) -> None:
        if len(self) != chain.dof:
            raise InputError(f"configuration has {len(self)} joints, chain has {chain.dof}")
        if np.any(self.q < chain.lower - tol) or np.any(self.q > chain.upper + tol):
            raise InputError(f"configuration {self.q.tolist()} violates joint limits")


@dataclass(frozen=True, eq=False)
class PointsOfInterest:
    """Tracked points on the held object, object frame, metres."""

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim == 1 and p.size == 3:
            p = p.reshape(1, 3)
        if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] < 1 or not np.all(np.isfinite(p)):
            raise InputError(f"points of interest must be a finite N x 3 array with N >= 1, got shape {p.shape}")
        object.__setattr__(self, "points", _frozen(p))
