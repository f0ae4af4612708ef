"""
Main application entry point.

This module initializes the FastAPI application and includes all routers.
"""

from fastapi import FastAPI

from graspalign.core.config import settings
from graspalign.core.logging import logger
from graspalign.core.middleware import TimingMiddleware
from graspalign.routers.alignment import router as alignment_router
from graspalign.routers.evaluation import router as evaluation_router
from graspalign.routers.health import router as health_router
from graspalign.routers.kinematics import router as kinematics_router

app = FastAPI(
    title=settings.api.title,
    description=settings.api.description,
    version=settings.api.version,
    debug=settings.debug,
)

app.add_middleware(TimingMiddleware)

# Include routers with /api prefix
app.include_router(
    health_router,
    prefix="/api/health",
    tags=["health"],
)
app.include_router(
    alignment_router,
    prefix="/api/alignment",
    tags=["alignment"],
)
app.include_router(
    kinematics_router,
    prefix="/api/kinematics",
    tags=["kinematics"],
)
app.include_router(
    evaluation_router,
    prefix="/api/evaluation",
    tags=["evaluation"],
)


@app.on_event("startup")
async def startup_event():
    """Actions to run on application startup."""
    logger.info(f"Starting {settings.api.title} API")
    logger.info(f"Environment: {settings.environment}")
    logger.info(f"Debug mode: {settings.debug}")
    logger.info(f"Solver threads: {settings.solver.threads}")


@app.on_event("shutdown")
async def shutdown_event():
    """Actions to run on application shutdown."""
    logger.info(f"Shutting down {settings.api.title} API")


@app.get("/")
async def root():
    """Root endpoint."""
    return {
        "message": f"{settings.api.title} API",
        "version": settings.api.version,
        "docs": "/docs",
    }
