# app/api/routes/__init__.py
from fastapi import APIRouter

from app.api.routes.decisions import router as decisions_router

router = APIRouter()

router.include_router(decisions_router)
