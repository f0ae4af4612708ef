"""
Weights of the direct pose-regression network.
"""
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from graspalign.core.errors import InputError
from graspalign.models.geometry import _frozen

ARCHITECTURE = (12, 64, 64, 12)


@dataclass(frozen=True, eq=False)
class RegressorParams:
    """Layer weights (out x in) and biases, plus the input/output normalization."""

    layers: List[Tuple[np.ndarray, np.ndarray]]
    input_mean: np.ndarray
    input_scale: np.ndarray
    output_mean: np.ndarray
    output_scale: np.ndarray

    def __post_init__(self):
        if len(self.layers) != len(ARCHITECTURE) - 1:
            raise InputError(f"regressor needs {len(ARCHITECTURE) - 1} layers, got {len(self.layers)}")
        frozen = []
        for k, (w, b) in enumerate(self.layers):
            w = np.asarray(w, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64).reshape(-1)
            expected = (ARCHITECTURE[k + 1], ARCHITECTURE[k])
            if w.shape != expected or b.shape != (expected[0],):
                raise InputError(f"layer {k} has weight {w.shape} and bias {b.shape}, expected {expected}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InputError(f"layer {k} has non-finite parameters")
            frozen.append((_frozen(w), _frozen(b)))
        object.__setattr__(self, "layers", frozen)
        for name in ("input_mean", "input_scale", "output_mean", "output_scale"):
            v = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1)
            if v.shape != (12,):
                raise InputError(f"{name} must have 12 entries")
            object.__setattr__(self, name, _frozen(v))

    def to_json(self) -> dict:
        return {
            "layers": [{"weight": w.tolist(), "bias": b.tolist()} for w, b in self.layers],
            "input_mean": self.input_mean.tolist(),
            "input_scale": self.input_scale.tolist(),
            "output_mean": self.output_mean.tolist(),
            "output_scale": self.output_scale.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "RegressorParams":
        try:
            return cls(
                layers=[(np.asarray(l["weight"]), np.asarray(l["bias"])) for l in data["layers"]],
                input_mean=data["input_mean"],
                input_scale=data["input_scale"],
                output_mean=data["output_mean"],
                output_scale=data["output_scale"],
            )
        except KeyError as e:
            raise InputError(f"regressor JSON missing key {e}") from e
