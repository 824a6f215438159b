# app/core/exception_handler.py
import logging

from fastapi import Request, status
from fastapi.exceptions import HTTPException, RequestValidationError
from fastapi.responses import JSONResponse

from app.core.errors import ToolkitError

logger = logging.getLogger(__name__)


def _envelope(status_code: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status_code,
        content={
            "success": False,
            "data": None,
            "error": {
                "code": code,
                "message": message
            }
        }
    )


async def toolkit_exception_handler(request: Request, exc: ToolkitError) -> JSONResponse:
    """Toolkit errors carry their own code and HTTP status"""
    if exc.http_status >= 500:
        logger.error("%s on %s: %s", exc.code, request.url.path, exc)
    return _envelope(exc.http_status, exc.code, str(exc))


ERROR_CODES = {
    400: "BAD_REQUEST",
    404: "NOT_FOUND",
    405: "METHOD_NOT_ALLOWED",
    422: "VALIDATION_ERROR",
    503: "SERVICE_UNAVAILABLE",
}


async def http_exception_handler(request: Request, exc: HTTPException) -> JSONResponse:
    """Routing and HTTP errors (unknown path, wrong method) in the envelope"""
    return _envelope(exc.status_code, ERROR_CODES.get(exc.status_code, "INTERNAL_ERROR"), str(exc.detail))


async def validation_exception_handler(request: Request, exc: RequestValidationError) -> JSONResponse:
    """Request bodies that fail pydantic validation, e.g. an empty score list"""
    problems = [f"{'.'.join(str(part) for part in err.get('loc', []))}: {err.get('msg', '')}" for err in exc.errors()]
    return _envelope(
        status.HTTP_422_UNPROCESSABLE_ENTITY,
        "VALIDATION_ERROR",
        f"Validation error: {'; '.join(problems)}",
    )
