# app/models/synthetic.py
import math
from enum import Enum
from typing import List

from pydantic import BaseModel, Field, field_validator, model_validator

from app.core.errors import InvalidArgument
from app.models.score_data import MAX_MONTH, MIN_MONTH

N_MONTHS = MAX_MONTH - MIN_MONTH + 1
MAJORITY = "majority"
MINORITY = "minority"


class Variant(str, Enum):
    BASE = "base"
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    V = "V"

    @classmethod
    def parse(cls, raw: str) -> "Variant":
        """Accept 'base', roman numerals or 1..5"""
        token = str(raw).strip()
        numeric = {"0": "base", "1": "I", "2": "II", "3": "III", "4": "IV", "5": "V"}
        token = numeric.get(token, token)
        for variant in cls:
            if variant.value.lower() == token.lower():
                return variant
        raise InvalidArgument(f"unknown dataset variant {raw!r}")

    @property
    def index(self) -> int:
        """Stable position used when deriving per-variant random streams"""
        return list(Variant).index(self)


class SyntheticSpec(BaseModel):
    """
    Knobs for the desk-scale analogue of the bank-account-fraud variants.
    prevalence[g][m] is the fraud rate of group g (0 = majority,
    1 = minority) in month m + 1; separability[g] is the distance between
    the legitimate and fraud class means of group g; drift[m] is added to
    the fraud-class mean in month m + 1.
    """

    n_rows: int = Field(..., ge=1)
    minority_fraction: float = Field(..., gt=0, lt=1)
    prevalence: List[List[float]]
    separability: List[float] = Field(..., min_length=2, max_length=2)
    drift: List[List[float]]
    month_shares: List[float] = Field(..., min_length=N_MONTHS, max_length=N_MONTHS)
    n_features: int = Field(8, ge=1)
    seed: int = 0

    @field_validator("separability")
    @classmethod
    def _nonnegative_gap(cls, value: List[float]) -> List[float]:
        if any(not math.isfinite(g) or g < 0 for g in value):
            raise InvalidArgument("separability gaps must be finite and nonnegative")
        return value

    @field_validator("month_shares")
    @classmethod
    def _positive_shares(cls, value: List[float]) -> List[float]:
        if any(not math.isfinite(s) or s <= 0 for s in value):
            raise InvalidArgument("month shares must be positive")
        return value

    @model_validator(mode="after")
    def _check_shapes(self) -> "SyntheticSpec":
        if len(self.prevalence) != 2 or any(len(row) != N_MONTHS for row in self.prevalence):
            raise InvalidArgument(f"prevalence must be 2 groups x {N_MONTHS} months")
        if any(not 0 < p < 1 for row in self.prevalence for p in row):
            raise InvalidArgument("prevalences must lie in (0, 1)")
        if len(self.drift) != N_MONTHS or any(len(row) != self.n_features for row in self.drift):
            raise InvalidArgument(f"drift must be {N_MONTHS} months x {self.n_features} features")
        if any(not math.isfinite(v) for row in self.drift for v in row):
            raise InvalidArgument("drift shifts must be finite")
        return self


class ClassifierSettings(BaseModel):
    learning_rate: float = Field(0.5, gt=0)
    epochs: int = Field(500, ge=1)


class BaselineClassifier(BaseModel):
    """Linear-logistic scorer: p = sigmoid(w . x + bias)"""

    weights: List[float]
    bias: float
    settings: ClassifierSettings = Field(default_factory=ClassifierSettings)

    @model_validator(mode="after")
    def _finite(self) -> "BaselineClassifier":
        if not all(math.isfinite(w) for w in self.weights) or not math.isfinite(self.bias):
            raise InvalidArgument("classifier parameters must be finite")
        return self
