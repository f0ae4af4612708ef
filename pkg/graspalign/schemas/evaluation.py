"""
Pydantic schemas for the evaluation endpoints.
"""

from typing import List, Literal, Tuple

from pydantic import BaseModel, Field


class DistanceRequest(BaseModel):
    """Schema for comparing two pixel sets."""

    A: List[Tuple[float, float]] = Field(min_length=1)
    B: List[Tuple[float, float]] = Field(min_length=1)
    method: Literal["kdtree", "brute"] = "kdtree"


class DistanceResponse(BaseModel):
    """Schema for distance response data."""

    D_AB: float
    D_BA: float
    D_hat: float
