# app/core/state.py
import logging
from typing import Optional

from fastapi import Request

from app.decision_engine.engine import DecisionEngine
from app.models.calibration import Calibrator
from app.models.policy import ThresholdPolicy

logger = logging.getLogger(__name__)


class ServiceState:
    """The calibrator and frozen policy served by one decision-service process"""

    def __init__(self, calibrator: Calibrator, policy: ThresholdPolicy):
        self.calibrator = calibrator
        self.policy = policy
        self.engine = DecisionEngine(policy)

    def swap_calibrator(self, calibrator: Calibrator) -> None:
        """Install the calibrator of a retrained model; the policy stays as it is"""
        logger.info("calibrator swapped: %s -> %s", self.calibrator.method.value, calibrator.method.value)
        self.calibrator = calibrator


def get_service_state(request: Request) -> ServiceState:
    state: Optional[ServiceState] = getattr(request.app.state, "service", None)
    if state is None:
        raise RuntimeError("Decision service not initialized")
    return state
