"""
Synthetic scenario description and the ground truth it produces.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional

import numpy as np

from graspalign.core.errors import InputError
from graspalign.models.alignment import AlignmentProblem
from graspalign.models.geometry import DenseCloud, Intrinsics, Transform3
from graspalign.models.kinematics import ChainSpec, Configuration
from graspalign.models.pointmap import PairPrediction

ALPHA_RANGE = (0.2, 5.0)
MIN_DEPTH = 0.05


@dataclass(frozen=True)
class NoiseSpec:
    point_sigma: float = 0.0
    pose_rot_sigma: float = 0.0
    pose_trans_sigma: float = 0.0
    distance_scaling: bool = False
    reference_depth: float = 0.5

    def __post_init__(self):
        for name in ("point_sigma", "pose_rot_sigma", "pose_trans_sigma"):
            if getattr(self, name) < 0:
                raise InputError(f"noise {name} must be nonnegative")
        if self.reference_depth <= 0:
            raise InputError("reference_depth must be positive")

    @property
    def is_zero(self) -> bool:
        return self.point_sigma == 0 and self.pose_rot_sigma == 0 and self.pose_trans_sigma == 0

    def factor(self, depth: float) -> float:
        """Noise multiplier at the given camera depth."""
        if not self.distance_scaling:
            return 1.0
        return (depth / self.reference_depth) ** 2


@dataclass(frozen=True, eq=False)
class Scenario:
    object_cloud: DenseCloud
    H_true: Transform3
    cam_base_true: Transform3
    alpha_true: float
    chain: ChainSpec
    train_configs: List[Configuration]
    test_configs: List[Configuration]
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    intrinsics: Intrinsics = field(default_factory=lambda: Intrinsics(600.0, 600.0, 320.0, 240.0))
    image_size: tuple = (640, 480)
    pointmap_stride: int = 20
    pair_layout: Literal["all", "ring"] = "all"
    object_kind: str = "custom"
    points_of_interest: Optional[np.ndarray] = None

    def __post_init__(self):
        lo, hi = ALPHA_RANGE
        if not lo <= self.alpha_true <= hi:
            raise InputError(f"alpha_true must lie in [{lo}, {hi}], got {self.alpha_true}")
        if len(self.train_configs) < 2:
            raise InputError("a scenario needs at least 2 training configurations")
        if self.pointmap_stride < 1:
            raise InputError("pointmap_stride must be positive")
        if self.pair_layout not in ("all", "ring"):
            raise InputError(f"pair_layout must be 'all' or 'ring', got {self.pair_layout!r}")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    H_true: Transform3
    alpha_true: float
    cam_base_true: Transform3
    train_cam_obj: List[Transform3]
    test_ee_poses: List[Transform3]
    test_cam_obj: List[Transform3]
    test_masks: List[np.ndarray]
    image_masks: Dict[int, np.ndarray] = field(default_factory=dict)
    test_configs: List[Configuration] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "H_true": self.H_true.to_json()["matrix"],
            "alpha_true": float(self.alpha_true),
            "cam_base_true": self.cam_base_true.to_json()["matrix"],
            "train_cam_obj": [t.to_json()["matrix"] for t in self.train_cam_obj],
            "test_ee_poses": [t.to_json()["matrix"] for t in self.test_ee_poses],
            "test_cam_obj": [t.to_json()["matrix"] for t in self.test_cam_obj],
            "test_configs": [[float(v) for v in c.q] for c in self.test_configs],
        }


@dataclass(frozen=True, eq=False)
class ScenarioOutputs:
    """Everything one call to the generator produces."""

    scenario: Scenario
    problem: AlignmentProblem
    predictions: List[PairPrediction]
    truth: GroundTruth
