"""
Pydantic schemas for the on-disk files.

This module defines the JSON layouts read and written by the command line:
problem files, pair manifests, test sets, solutions and scenario specs.
Relative paths inside a file are resolved against the file's directory.
"""

from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

Matrix16 = List[float]
Point3 = Tuple[float, float, float]

OBJECT_KINDS = ("hammer", "block", "tape", "teapot", "screwdriver", "wrench", "brush", "custom")


class IntrinsicsSchema(BaseModel):
    """Schema for pinhole intrinsics."""

    model_config = ConfigDict(extra="forbid")

    fx: float = Field(default=600.0, gt=0)
    fy: float = Field(default=600.0, gt=0)
    cx: float = 320.0
    cy: float = 240.0


class ProblemFile(BaseModel):
    """Schema for an alignment problem: poses, dense cloud path and intrinsics."""

    model_config = ConfigDict(extra="forbid")

    ee_poses: List[Matrix16] = Field(min_length=2)
    cam_obj_poses: List[Matrix16] = Field(min_length=2)
    dense: str
    intrinsics: IntrinsicsSchema
    render_subsample: int = Field(default=8, ge=1)

    @model_validator(mode="after")
    def check_lengths(self):
        if len(self.ee_poses) != len(self.cam_obj_poses):
            raise ValueError(
                f"{len(self.ee_poses)} end-effector poses but {len(self.cam_obj_poses)} camera-object poses"
            )
        for m in self.ee_poses + self.cam_obj_poses:
            if len(m) != 16:
                raise ValueError(f"pose matrices must have 16 entries, got {len(m)}")
        return self


class PairEntry(BaseModel):
    """Schema for one pair prediction: two PMAP files, member n first."""

    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=0)
    m: int = Field(ge=0)
    x_nn: str
    x_nm: str


class ManifestFile(BaseModel):
    """Schema for a pair manifest.

    ee_poses and intrinsics are optional; when present the align command also
    writes a problem file ready for solve.
    """

    model_config = ConfigDict(extra="forbid")

    pairs: List[PairEntry] = Field(min_length=1)
    masks: Dict[str, str] = Field(default_factory=dict)
    ee_poses: Optional[List[Matrix16]] = None
    intrinsics: Optional[IntrinsicsSchema] = None
    render_subsample: int = Field(default=8, ge=1)


class EvaluationSetFile(BaseModel):
    """Schema for a held-out test set: end-effector poses and silhouette masks."""

    model_config = ConfigDict(extra="forbid")

    ee_poses: List[Matrix16] = Field(min_length=1)
    masks: List[str] = Field(min_length=1)
    intrinsics: Optional[IntrinsicsSchema] = None

    @model_validator(mode="after")
    def check_lengths(self):
        if len(self.ee_poses) != len(self.masks):
            raise ValueError(f"{len(self.ee_poses)} test poses but {len(self.masks)} masks")
        return self


class SolutionFile(BaseModel):
    """Schema for a solution file as written by the solve command."""

    model_config = ConfigDict(extra="ignore")

    method: Literal["rendered", "no-render", "regress"] = "rendered"
    problem: Optional[str] = None
    H: Optional[Matrix16] = None
    alpha: Optional[float] = Field(default=None, gt=0)
    regressor: Optional[str] = None

    @model_validator(mode="after")
    def check_method(self):
        if self.method == "regress" and self.regressor is None:
            raise ValueError("a regress solution must name its regressor file")
        if self.method != "regress" and (self.H is None or self.alpha is None):
            raise ValueError(f"a {self.method} solution must carry H and alpha")
        return self


class ObjectSpec(BaseModel):
    """Schema for the simulated object."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["hammer", "block", "tape", "teapot", "screwdriver", "wrench", "brush", "custom"] = "hammer"
    n_points: int = Field(default=4000, ge=2000, le=20000)
    params: Dict[str, Any] = Field(default_factory=dict)


class NoiseSchema(BaseModel):
    """Schema for the observation noise model."""

    model_config = ConfigDict(extra="forbid")

    point_sigma: float = Field(default=0.0, ge=0)
    pose_rot_sigma: float = Field(default=0.0, ge=0)
    pose_trans_sigma: float = Field(default=0.0, ge=0)
    distance_scaling: bool = False
    reference_depth: float = Field(default=0.5, gt=0)


class ScenarioSpec(BaseModel):
    """Schema for a simulate spec.

    chain is a built-in chain name or a chain description
    ({"joints": [...], "tip_offset": [...]}).
    """

    model_config = ConfigDict(extra="forbid")

    object: ObjectSpec = Field(default_factory=ObjectSpec)
    chain: Union[str, Dict[str, Any]] = "desk6r"
    q_nominal: Optional[List[float]] = None
    n_train: int = Field(default=9, ge=2, le=64)
    n_test: int = Field(default=5, ge=1, le=64)
    alpha_true: float = Field(default=1.0, ge=0.2, le=5.0)
    noise: NoiseSchema = Field(default_factory=NoiseSchema)
    seed: int = 0
    depth: Optional[float] = Field(default=None, gt=0.1, le=3.0)
    config_spread: float = Field(default=0.15, gt=0, le=1.0)
    pair_layout: Literal["all", "ring"] = "all"
    pointmap_stride: int = Field(default=20, ge=1)
    intrinsics: IntrinsicsSchema = Field(default_factory=IntrinsicsSchema)
    image_size: Tuple[int, int] = (640, 480)
    render_subsample: int = Field(default=8, ge=1)
