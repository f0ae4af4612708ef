"""
Health check endpoints.

This module provides endpoints for checking that the service is up and which
version it runs.
"""

from typing import Dict

import torch
from fastapi import APIRouter

from graspalign.core.config import settings
from graspalign.core.logging import logger

router = APIRouter()


@router.get("/", response_model=Dict[str, str])
async def health_check() -> Dict[str, str]:
    """
    Basic health check endpoint.

    Returns:
        Health status
    """
    logger.debug("Health check endpoint called")
    return {"status": "ok"}


@router.get("/version", response_model=Dict[str, str])
async def version() -> Dict[str, str]:
    """
    Version information.

    Returns:
        Package version and the numerical backend in use
    """
    return {
        "version": settings.api.version,
        "torch": torch.__version__,
        "threads": str(torch.get_num_threads()),
    }
