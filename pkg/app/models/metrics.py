# app/models/metrics.py
from typing import List

from pydantic import BaseModel, Field, model_validator


class ConfusionCounts(BaseModel):
    tp: int = Field(..., ge=0)
    fp: int = Field(..., ge=0)
    tn: int = Field(..., ge=0)
    fn: int = Field(..., ge=0)

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


class ReliabilityBin(BaseModel):
    lower: float = Field(..., ge=0, le=1)
    upper: float = Field(..., ge=0, le=1)
    mean_predicted: float  # NaN for an empty bin
    empirical_rate: float  # NaN for an empty bin
    count: int = Field(..., ge=0)


class MetricsReport(BaseModel):
    """
    Metrics at one operating point. Ratios with a zero denominator are NaN
    and are written as "undefined" in text output.
    """

    threshold: float
    confusion: ConfusionCounts
    precision: float
    recall: float
    fpr: float
    tpr_at_fpr: float
    target_fpr: float
    ece: float
    brier: float
    nll: float
    reliability_bins: List[ReliabilityBin]

    @model_validator(mode="after")
    def _bins_cover_rows(self) -> "MetricsReport":
        if sum(b.count for b in self.reliability_bins) != self.confusion.n:
            raise ValueError("reliability bin counts must sum to the number of rows")
        return self
