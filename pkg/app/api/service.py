# app/api/service.py
from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from starlette.exceptions import HTTPException as StarletteHTTPException

from app import __version__
from app.api.routes import router as api_router
from app.core.errors import ToolkitError
from app.core.exception_handler import (
    http_exception_handler, toolkit_exception_handler, validation_exception_handler
)
from app.core.state import ServiceState
from app.models.calibration import Calibrator
from app.models.policy import ThresholdPolicy


def create_app(calibrator: Calibrator, policy: ThresholdPolicy) -> FastAPI:
    """Decision service around one calibrator and one frozen threshold policy"""
    app = FastAPI(
        title="Calibrated Decision Service",
        description="Calibrates raw fraud scores and applies a frozen decision threshold",
        version=__version__
    )

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    app.state.service = ServiceState(calibrator, policy)

    @app.get("/health")
    async def health_check():
        return {
            "success": True,
            "data": {
                "status": "healthy",
                "calibration_method": app.state.service.calibrator.method.value,
                "threshold": app.state.service.policy.threshold
            },
            "error": None
        }

    # Register exception handlers for JSON envelope format
    app.add_exception_handler(ToolkitError, toolkit_exception_handler)
    app.add_exception_handler(StarletteHTTPException, http_exception_handler)
    app.add_exception_handler(RequestValidationError, validation_exception_handler)

    app.include_router(api_router, prefix="/api")
    return app
