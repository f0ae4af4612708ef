"""
Logging configuration for graspalign.

This module sets up logging with different levels for different environments.
It uses loguru; records go to standard error so that standard output stays
reserved for command results.
"""

import sys
from typing import Optional

from loguru import logger

from .config import LOG_LEVELS, settings


def setup_logging(level: Optional[str] = None) -> None:
    """Set up logging configuration based on the environment.

    Args:
        level: Optional override ("error", "info", "debug", ...). Defaults to
            the level picked by GRASPALIGN_LOG.
    """
    logger.remove()

    log_settings = settings.logging
    resolved = LOG_LEVELS.get(level.lower(), level.upper()) if level else log_settings.level

    if log_settings.serialize:
        logger.add(
            sys.stderr,
            format=log_settings.format,
            level=resolved,
            colorize=False,
            serialize=True,
        )
    else:
        logger.add(
            sys.stderr,
            format=log_settings.format,
            level=resolved,
            colorize=True,
            backtrace=True,
            diagnose=settings.debug,
        )

    logger.debug(f"Logging initialized for environment: {settings.environment.value} at {resolved}")


# Initialize logging
setup_logging()
