# app/models/experiment.py
from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app.core import config
from app.models.calibration import CalibrationMethod
from app.models.policy import PolicySource
from app.models.score_data import MonthRange
from app.models.synthetic import ClassifierSettings, Variant

# Metrics stored per (variant, method, bootstrap) record
RECORD_METRICS = ["precision", "recall", "tpr_at_fpr", "ece", "brier"]

# Direction used for "best" marking and significance stars
HIGHER_IS_BETTER = {
    "precision": True,
    "recall": True,
    "tpr_at_fpr": True,
    "ece": False,
    "brier": False,
}


class Aggregation(str, Enum):
    MEAN_STD = "mean_std"


class SplitConfig(BaseModel):
    train_months: MonthRange = Field(default_factory=lambda: MonthRange(start=1, end=6))
    validation_fraction: float = Field(0.3, gt=0, lt=1)
    test_months: MonthRange = Field(default_factory=lambda: MonthRange(start=7, end=8))

    @model_validator(mode="after")
    def _disjoint(self) -> "SplitConfig":
        if self.train_months.overlaps(self.test_months):
            raise ValueError("train and test month ranges overlap")
        return self


class ExperimentConfig(BaseModel):
    variants: List[Variant] = Field(default_factory=lambda: list(Variant), min_length=1)
    methods: List[CalibrationMethod] = Field(default_factory=lambda: list(CalibrationMethod), min_length=1)
    n_bootstraps: int = Field(default_factory=lambda: config.N_BOOTSTRAPS, ge=1)
    target_recall: float = Field(default_factory=lambda: config.TARGET_RECALL, gt=0, le=1)
    target_fpr: float = Field(default_factory=lambda: config.TARGET_FPR, gt=0, lt=1)
    ece_bins: int = Field(default_factory=lambda: config.ECE_BINS, ge=1)
    master_seed: int = Field(default_factory=lambda: config.MASTER_SEED, ge=0)
    n_rows: int = Field(50_000, ge=10)
    split: SplitConfig = Field(default_factory=SplitConfig)
    classifier: ClassifierSettings = Field(default_factory=ClassifierSettings)
    platt_smoothing: bool = True
    aggregation: Aggregation = Aggregation.MEAN_STD

    @field_validator("variants", mode="before")
    @classmethod
    def _parse_variants(cls, value):
        if isinstance(value, list):
            return [v if isinstance(v, Variant) else Variant.parse(v) for v in value]
        return value

    @field_validator("methods")
    @classmethod
    def _unique_methods(cls, value: List[CalibrationMethod]) -> List[CalibrationMethod]:
        if len(set(value)) != len(value):
            raise ValueError("methods must not repeat")
        return value


class ExperimentRecord(BaseModel):
    variant: Variant
    method: CalibrationMethod
    bootstrap: int = Field(..., ge=0)
    precision: float
    recall: float
    tpr_at_fpr: float
    ece: float
    brier: float
    threshold: float


class SkippedBootstrap(BaseModel):
    variant: Variant
    bootstrap: int
    reason: str


class Aggregate(BaseModel):
    variant: Variant
    method: CalibrationMethod
    metric: str
    mean: float
    std: float
    n: int


class Significance(BaseModel):
    variant: Variant
    method: CalibrationMethod
    metric: str
    p_value: float
    n_pairs: int
    w_statistic: float
    sided: str = "two_sided"


class ExperimentResult(BaseModel):
    config: ExperimentConfig
    records: List[ExperimentRecord]
    aggregates: List[Aggregate]
    significance: List[Significance]
    skipped: List[SkippedBootstrap] = []
    thresholds: Dict[str, Dict[str, float]] = {}
    threshold_sources: Dict[str, Dict[str, PolicySource]] = {}
    notes: Optional[str] = None
