# app/models/policy.py
import math
from datetime import datetime, timezone
from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field, field_validator

from app.models.calibration import CalibrationMethod
from app.models.score_data import ScoreSpace


class Decision(str, Enum):
    APPROVE = "approve"
    REJECT = "reject"


class RiskLevel(str, Enum):
    LOW = "LOW"
    MEDIUM = "MEDIUM"
    HIGH = "HIGH"
    CRITICAL = "CRITICAL"


class PolicySource(BaseModel):
    """Which bootstrap / calibration method / dataset variant produced a threshold"""

    bootstrap: int = Field(0, ge=0)
    method: Optional[CalibrationMethod] = None
    variant: Optional[str] = None


class ThresholdPolicy(BaseModel):
    threshold: float
    target_recall: float = Field(..., gt=0, le=1)
    source: PolicySource = Field(default_factory=PolicySource)
    score_space: ScoreSpace = ScoreSpace.PROBABILITY

    @field_validator("threshold")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("threshold must be finite")
        return value


class DecisionOutput(BaseModel):
    decision: Decision
    risk_level: RiskLevel
    probability: float = Field(..., ge=0, le=1)
    threshold: float
    message: str
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
