"""
Translation of service errors into HTTP errors.
"""
from fastapi import HTTPException

from graspalign.core.errors import GraspAlignError
from graspalign.core.logging import logger


def http_error(action: str, e: ValueError) -> HTTPException:
    """HTTPException carrying the error's status (422 for plain ValueError)."""
    status_code = e.http_status if isinstance(e, GraspAlignError) else 422
    logger.warning(f"{action} failed: {str(e)}")
    return HTTPException(status_code=status_code, detail=str(e))
