# app/api/routes/decisions.py
import logging
from typing import Any, Dict, List

from fastapi import APIRouter, Body, Depends
from pydantic import BaseModel, Field

from app.core.state import ServiceState, get_service_state
from app.crud.artifacts import calibrator_from_document
from app.risk_engine.calibrators import apply_batch

logger = logging.getLogger(__name__)

router = APIRouter(tags=["decisions"])


class DecisionRequest(BaseModel):
    """Raw model scores, in the score space the calibrator was fitted on"""

    scores: List[float] = Field(..., min_length=1)


@router.post("/decisions", response_model=dict)
async def make_decisions(
    request: DecisionRequest,
    state: ServiceState = Depends(get_service_state)
):
    """
    Calibrate raw scores and decide each against the frozen threshold
    """
    probabilities = apply_batch(state.calibrator, request.scores)
    decisions = state.engine.make_decisions(probabilities)
    logger.info(
        "decided %d scores, %d rejected",
        len(decisions), sum(1 for d in decisions if d.decision.value == "reject"),
    )
    return {
        "success": True,
        "data": {
            "calibration_method": state.calibrator.method.value,
            "decisions": [d.model_dump(mode="json") for d in decisions]
        },
        "error": None
    }


@router.get("/policy", response_model=dict)
async def get_policy(state: ServiceState = Depends(get_service_state)):
    """
    The frozen threshold policy in force
    """
    return {
        "success": True,
        "data": {
            "policy": state.policy.model_dump(mode="json"),
            "calibration_method": state.calibrator.method.value
        },
        "error": None
    }


@router.put("/calibrator", response_model=dict)
async def replace_calibrator(
    document: Dict[str, Any] = Body(...),
    state: ServiceState = Depends(get_service_state)
):
    """
    Install the calibrator of a retrained model. The threshold policy is
    left untouched.
    """
    calibrator = calibrator_from_document(document)
    state.swap_calibrator(calibrator)
    return {
        "success": True,
        "data": {
            "calibration_method": calibrator.method.value,
            "threshold": state.policy.threshold
        },
        "error": None
    }
