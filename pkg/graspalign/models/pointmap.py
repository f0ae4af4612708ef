"""
Pointmap rasters and the variables/results of the pairwise alignment.

Rasters are stored h-major: coords has shape (H, W, 3), confidence (H, W).
This is the row-major order of the PMAP file format.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from graspalign.core.errors import InputError
from graspalign.models.geometry import DenseCloud, Transform3, _frozen


@dataclass(frozen=True, eq=False)
class Pointmap:
    """Per-pixel 3D coordinates in the camera frame of the pair's first image."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.ndim != 3 or c.shape[2] != 3 or c.shape[0] < 1 or c.shape[1] < 1:
            raise InputError(f"pointmap must have shape (H, W, 3), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InputError("pointmap coordinates must be finite")
        object.__setattr__(self, "coords", _frozen(c))

    @property
    def height(self) -> int:
        return self.coords.shape[0]

    @property
    def width(self) -> int:
        return self.coords.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.coords.shape[:2]

    def flat(self) -> np.ndarray:
        return self.coords.reshape(-1, 3)


@dataclass(frozen=True, eq=False)
class ConfidenceMap:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise InputError(f"confidence map must have shape (H, W), got {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InputError("confidence values must be finite and nonnegative")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


@dataclass(frozen=True, eq=False)
class PairPrediction:
    """Two pointmaps and confidences for the image pair (n, m).

    x_nn holds image n's pixels and x_nm image m's pixels, both expressed in
    camera n's frame.
    """

    n: int
    m: int
    x_nn: Pointmap
    x_nm: Pointmap
    c_nn: ConfidenceMap
    c_nm: ConfidenceMap

    def __post_init__(self):
        if self.n == self.m:
            raise InputError(f"pair must join two different images, got n = m = {self.n}")
        if self.n < 0 or self.m < 0:
            raise InputError("image indices must be nonnegative")
        shapes = {self.x_nn.shape, self.x_nm.shape, self.c_nn.shape, self.c_nm.shape}
        if len(shapes) != 1:
            raise InputError(f"pair ({self.n},{self.m}) rasters disagree in size: {sorted(shapes)}")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.x_nn.shape

    def members(self) -> List[Tuple[int, Pointmap, ConfidenceMap]]:
        """(image index, pointmap, confidence) for both members, first member first."""
        return [(self.n, self.x_nn, self.c_nn), (self.m, self.x_nm, self.c_nm)]


@dataclass(frozen=True, eq=False)
class GlobalAlignmentVariables:
    """Unknowns of the pairwise alignment objective.

    global_maps[i] is image i's raster in the common frame. pair_poses[e] and
    pair_scales[e] belong to pair e and act on both of its member rasters.
    """

    global_maps: Dict[int, np.ndarray]
    pair_poses: List[Transform3]
    pair_scales: List[float]

    def __post_init__(self):
        if len(self.pair_poses) != len(self.pair_scales):
            raise InputError("one pose and one scale per pair are required")
        if any(not np.isfinite(s) or s <= 0 for s in self.pair_scales):
            raise InputError(f"pair scales must be positive, got {self.pair_scales}")
        maps = {int(k): _frozen(v) for k, v in self.global_maps.items()}
        object.__setattr__(self, "global_maps", maps)
        object.__setattr__(self, "pair_scales", [float(s) for s in self.pair_scales])


@dataclass(frozen=True, eq=False)
class GlobalAlignmentResult:
    dense: DenseCloud
    camera_poses: List[Transform3]
    final_loss: float
    converged: bool = True
    iterations: int = 0
    variables: Optional[GlobalAlignmentVariables] = None
    image_ids: List[int] = field(default_factory=list)
    loss_history: List[float] = field(default_factory=list)
