# app/models/score_data.py
from enum import Enum
from typing import Any, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.errors import DimensionMismatch, InvalidArgument, LabelOutOfRange, ScoreOutOfRange

MIN_MONTH = 1
MAX_MONTH = 8


class ScoreSpace(str, Enum):
    PROBABILITY = "probability"
    MARGIN = "margin"


def _frozen_array(values: Any, dtype: Any) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


def _check_months(month: np.ndarray) -> None:
    if month.size and (month.min() < MIN_MONTH or month.max() > MAX_MONTH):
        raise InvalidArgument(f"month tags must lie in [{MIN_MONTH}, {MAX_MONTH}]")


class ScoreSet(BaseModel):
    """
    Parallel arrays of model scores and binary labels, with optional sample
    weights and group/month tags. Arrays are read-only after construction.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    scores: np.ndarray
    labels: np.ndarray
    weights: np.ndarray
    group: Optional[np.ndarray] = None
    month: Optional[np.ndarray] = None
    score_space: ScoreSpace = ScoreSpace.PROBABILITY

    @model_validator(mode="before")
    @classmethod
    def _coerce_arrays(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        scores = _frozen_array(data.get("scores", []), np.float64).reshape(-1)
        data["scores"] = scores
        data["labels"] = _frozen_array(data.get("labels", []), np.float64).reshape(-1)
        weights = data.get("weights")
        data["weights"] = _frozen_array(np.ones(scores.shape[0]) if weights is None else weights, np.float64).reshape(-1)
        if data.get("group") is not None:
            data["group"] = _frozen_array(data["group"], object).reshape(-1)
        if data.get("month") is not None:
            data["month"] = _frozen_array(data["month"], np.int64).reshape(-1)
        return data

    @model_validator(mode="after")
    def _check_invariants(self) -> "ScoreSet":
        n = self.scores.shape[0]
        for name in ("labels", "weights", "group", "month"):
            values = getattr(self, name)
            if values is not None and values.shape[0] != n:
                raise DimensionMismatch(f"{name} has {values.shape[0]} entries, scores has {n}")
        bad = np.flatnonzero((self.labels != 0) & (self.labels != 1))
        if bad.size:
            raise LabelOutOfRange(f"label {self.labels[bad[0]]!r} is not 0 or 1", row=int(bad[0]))
        if np.any(~np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise InvalidArgument("weights must be finite and nonnegative")
        if self.score_space == ScoreSpace.PROBABILITY:
            bad = np.flatnonzero(~((self.scores >= 0) & (self.scores <= 1)))
            if bad.size:
                raise ScoreOutOfRange(
                    f"probability score {self.scores[bad[0]]!r} outside [0, 1]", row=int(bad[0])
                )
        if self.month is not None:
            _check_months(self.month)
        return self

    def __len__(self) -> int:
        return int(self.scores.shape[0])

    @property
    def n_positive(self) -> int:
        return int(np.count_nonzero(self.labels == 1))

    @property
    def n_negative(self) -> int:
        return int(np.count_nonzero(self.labels == 0))

    def has_both_classes(self) -> bool:
        return self.n_positive > 0 and self.n_negative > 0

    def subset(self, indices: Sequence[int] | np.ndarray) -> "ScoreSet":
        idx = np.asarray(indices, dtype=np.int64)
        return ScoreSet(
            scores=self.scores[idx],
            labels=self.labels[idx],
            weights=self.weights[idx],
            group=None if self.group is None else self.group[idx],
            month=None if self.month is None else self.month[idx],
            score_space=self.score_space,
        )

    def with_scores(self, scores: np.ndarray, score_space: ScoreSpace = ScoreSpace.PROBABILITY) -> "ScoreSet":
        """Same rows and tags, new scores (typically calibrated probabilities)"""
        return ScoreSet(
            scores=scores,
            labels=self.labels,
            weights=self.weights,
            group=self.group,
            month=self.month,
            score_space=score_space,
        )


class FeatureDataset(BaseModel):
    """Rows of fixed-length feature vectors with label, group tag and month"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    features: np.ndarray
    labels: np.ndarray
    group: np.ndarray
    month: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _coerce_arrays(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        features = np.array(data.get("features", []), dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(-1, 1) if features.size else features.reshape(0, 0)
        features.setflags(write=False)
        data["features"] = features
        data["labels"] = _frozen_array(data.get("labels", []), np.float64).reshape(-1)
        data["group"] = _frozen_array(data.get("group", []), object).reshape(-1)
        data["month"] = _frozen_array(data.get("month", []), np.int64).reshape(-1)
        return data

    @model_validator(mode="after")
    def _check_invariants(self) -> "FeatureDataset":
        if self.features.ndim != 2:
            raise DimensionMismatch("features must be a 2-d array (rows x dimensions)")
        n = self.features.shape[0]
        for name in ("labels", "group", "month"):
            if getattr(self, name).shape[0] != n:
                raise DimensionMismatch(f"{name} has {getattr(self, name).shape[0]} entries, features has {n} rows")
        bad = np.flatnonzero((self.labels != 0) & (self.labels != 1))
        if bad.size:
            raise LabelOutOfRange(f"label {self.labels[bad[0]]!r} is not 0 or 1", row=int(bad[0]))
        _check_months(self.month)
        return self

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def has_both_classes(self) -> bool:
        return bool(np.any(self.labels == 1) and np.any(self.labels == 0))

    def subset(self, indices: Sequence[int] | np.ndarray) -> "FeatureDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return FeatureDataset(
            features=self.features[idx],
            labels=self.labels[idx],
            group=self.group[idx],
            month=self.month[idx],
        )


class ColumnMap(BaseModel):
    """CSV column names for the ScoreSet fields"""

    score: str = "score"
    label: str = "label"
    weight: Optional[str] = None
    group: Optional[str] = None
    month: Optional[str] = None


class MonthRange(BaseModel):
    """Inclusive range of month tags"""

    start: int = Field(..., ge=MIN_MONTH, le=MAX_MONTH)
    end: int = Field(..., ge=MIN_MONTH, le=MAX_MONTH)

    @model_validator(mode="after")
    def _ordered(self) -> "MonthRange":
        if self.end < self.start:
            raise InvalidArgument(f"month range end {self.end} precedes start {self.start}")
        return self

    def overlaps(self, other: "MonthRange") -> bool:
        return self.start <= other.end and other.start <= self.end

    def contains(self, month: np.ndarray) -> np.ndarray:
        return (month >= self.start) & (month <= self.end)
