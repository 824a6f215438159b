# app/models/calibration.py
import math
from enum import Enum
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.errors import SchemaError
from app.models.score_data import ScoreSpace

TEMPERATURE_MIN = 0.05
TEMPERATURE_MAX = 20.0
PLATT_PARAM_CAP = 1e3


class CalibrationMethod(str, Enum):
    IDENTITY = "identity"
    PLATT = "platt"
    ISOTONIC = "isotonic"
    TEMPERATURE = "temperature"
    BETA = "beta"


# Canonical row order for reports and experiment configs
METHOD_ORDER = [
    CalibrationMethod.IDENTITY,
    CalibrationMethod.PLATT,
    CalibrationMethod.ISOTONIC,
    CalibrationMethod.TEMPERATURE,
    CalibrationMethod.BETA,
]


class PlattParams(BaseModel):
    """
    P(y=1|s) = 1 / (1 + exp(A*s + B)). A < 0 means the raw scores are
    positively oriented (higher score, higher fraud probability).
    """

    model_config = ConfigDict(frozen=True)

    A: float
    B: float

    @field_validator("A", "B")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise SchemaError("Platt parameters must be finite")
        return value


class IsotonicModel(BaseModel):
    """Pooled-block representative scores and their fitted probabilities"""

    model_config = ConfigDict(frozen=True)

    breakpoints: List[float] = Field(..., min_length=1)
    values: List[float] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _check_shape(self) -> "IsotonicModel":
        x = np.asarray(self.breakpoints, dtype=np.float64)
        y = np.asarray(self.values, dtype=np.float64)
        if x.shape != y.shape:
            raise SchemaError("isotonic breakpoints and values differ in length")
        if not np.all(np.isfinite(x)) or np.any(np.diff(x) <= 0):
            raise SchemaError("isotonic breakpoints must be finite and strictly increasing")
        if np.any(np.diff(y) < 0) or np.any(y < 0) or np.any(y > 1):
            raise SchemaError("isotonic values must be nondecreasing and lie in [0, 1]")
        return self


class TemperatureParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    T: float = Field(..., ge=TEMPERATURE_MIN, le=TEMPERATURE_MAX)


class BetaParams(BaseModel):
    """m(p; a, b, c) = p^a * c / (p^a * c + (1 - p)^b)"""

    model_config = ConfigDict(frozen=True)

    a: float = Field(..., ge=0)
    b: float = Field(..., ge=0)
    c: float = Field(..., gt=0)

    @field_validator("a", "b", "c")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise SchemaError("beta parameters must be finite")
        return value


CalibratorParams = Union[PlattParams, IsotonicModel, TemperatureParams, BetaParams]

PARAMS_BY_METHOD = {
    CalibrationMethod.PLATT: PlattParams,
    CalibrationMethod.ISOTONIC: IsotonicModel,
    CalibrationMethod.TEMPERATURE: TemperatureParams,
    CalibrationMethod.BETA: BetaParams,
}


class Calibrator(BaseModel):
    """A fitted transform from raw scores to calibrated probabilities"""

    model_config = ConfigDict(frozen=True)

    method: CalibrationMethod
    params: Optional[CalibratorParams] = None
    score_space: ScoreSpace = ScoreSpace.PROBABILITY

    @model_validator(mode="after")
    def _params_match_method(self) -> "Calibrator":
        expected = PARAMS_BY_METHOD.get(self.method)
        if expected is None:
            if self.params is not None:
                raise SchemaError("identity calibrator takes no parameters")
        elif not isinstance(self.params, expected):
            raise SchemaError(f"{self.method.value} calibrator requires {expected.__name__}")
        return self
