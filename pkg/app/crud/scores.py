# app/crud/scores.py
import logging
from pathlib import Path
from typing import Optional, Tuple, TypeVar

import numpy as np
import pandas as pd

from app.core.errors import (
    InputFileError, InvalidArgument, LabelOutOfRange, MissingColumnError, ParseError, ScoreOutOfRange
)
from app.models.score_data import ColumnMap, FeatureDataset, MonthRange, ScoreSet, ScoreSpace

logger = logging.getLogger(__name__)

# 17 significant digits round-trip every IEEE double exactly
FLOAT_FORMAT = "%.17g"

Part = TypeVar("Part", ScoreSet, FeatureDataset)


def read_raw_csv(path: str | Path) -> pd.DataFrame:
    """Read a CSV keeping every cell as text, so parsing errors can be row-indexed"""
    path = Path(path)
    if not path.is_file():
        raise InputFileError(f"file not found: {path}")
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, sep=",")
    except pd.errors.EmptyDataError:
        raise ParseError(f"{path} has no header row")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise ParseError(f"{path} is not a readable CSV file: {e}")


def _require(frame: pd.DataFrame, column: str) -> pd.Series:
    if column not in frame.columns:
        raise MissingColumnError(f"column {column!r} not found (have: {', '.join(frame.columns)})")
    return frame[column]


def _parse_floats(column: pd.Series, name: str) -> np.ndarray:
    values = np.empty(len(column), dtype=np.float64)
    for row, token in enumerate(column.tolist()):
        try:
            values[row] = float(token)
        except ValueError:
            raise ParseError(f"{name} value {token!r} is not numeric", row=row)
        if not np.isfinite(values[row]):
            raise ParseError(f"{name} value {token!r} is not finite", row=row)
    return values


def _parse_labels(column: pd.Series, name: str) -> np.ndarray:
    labels = _parse_floats(column, name)
    bad = np.flatnonzero((labels != 0) & (labels != 1))
    if bad.size:
        raise LabelOutOfRange(f"{name} value {column.iloc[bad[0]]!r} is not 0 or 1", row=int(bad[0]))
    return labels


def _parse_months(column: pd.Series, name: str) -> np.ndarray:
    months = _parse_floats(column, name)
    bad = np.flatnonzero(months != np.round(months))
    if bad.size:
        raise ParseError(f"{name} value {column.iloc[bad[0]]!r} is not an integer", row=int(bad[0]))
    return months.astype(np.int64)


def scores_from_frame(
    frame: pd.DataFrame,
    columns: ColumnMap = ColumnMap(),
    score_space: ScoreSpace = ScoreSpace.PROBABILITY,
) -> ScoreSet:
    if len(frame) == 0:
        raise ParseError("no data rows")
    scores = _parse_floats(_require(frame, columns.score), columns.score)
    labels = _parse_labels(_require(frame, columns.label), columns.label)
    if score_space == ScoreSpace.PROBABILITY:
        bad = np.flatnonzero((scores < 0) | (scores > 1))
        if bad.size:
            raise ScoreOutOfRange(f"probability score {scores[bad[0]]!r} outside [0, 1]", row=int(bad[0]))
    weights = None
    if columns.weight:
        weights = _parse_floats(_require(frame, columns.weight), columns.weight)
        bad = np.flatnonzero(weights < 0)
        if bad.size:
            raise ParseError(f"weight {weights[bad[0]]!r} is negative", row=int(bad[0]))
    group = _require(frame, columns.group).to_numpy(dtype=object) if columns.group else None
    month = _parse_months(_require(frame, columns.month), columns.month) if columns.month else None
    return ScoreSet(
        scores=scores, labels=labels, weights=weights, group=group, month=month, score_space=score_space
    )


def load_scores(
    path: str | Path,
    columns: ColumnMap = ColumnMap(),
    score_space: ScoreSpace = ScoreSpace.PROBABILITY,
) -> ScoreSet:
    """Load a labelled score file; row order is preserved"""
    score_set = scores_from_frame(read_raw_csv(path), columns, score_space)
    logger.debug("loaded %d scores from %s", len(score_set), path)
    return score_set


def scores_to_frame(score_set: ScoreSet, columns: ColumnMap = ColumnMap()) -> pd.DataFrame:
    data = {columns.score: score_set.scores, columns.label: score_set.labels.astype(np.int64)}
    if columns.weight:
        data[columns.weight] = score_set.weights
    if columns.group and score_set.group is not None:
        data[columns.group] = score_set.group
    if columns.month and score_set.month is not None:
        data[columns.month] = score_set.month
    return pd.DataFrame(data)


def save_scores(score_set: ScoreSet, path: str | Path, columns: Optional[ColumnMap] = None) -> None:
    """
    Write a ScoreSet as CSV. Optional columns are written when the set
    carries them; their names default to weight/group/month.
    """
    if columns is None:
        columns = ColumnMap(
            weight="weight" if not np.all(score_set.weights == 1) else None,
            group="group" if score_set.group is not None else None,
            month="month" if score_set.month is not None else None,
        )
    write_frame(scores_to_frame(score_set, columns), path)


def write_frame(frame: pd.DataFrame, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def feature_columns(n_features: int) -> list[str]:
    return [f"f{j}" for j in range(n_features)]


def save_dataset(dataset: FeatureDataset, path: str | Path) -> None:
    frame = pd.DataFrame(dataset.features, columns=feature_columns(dataset.n_features))
    frame["label"] = dataset.labels.astype(np.int64)
    frame["group"] = dataset.group
    frame["month"] = dataset.month
    write_frame(frame, path)


def load_dataset(path: str | Path) -> FeatureDataset:
    frame = read_raw_csv(path)
    if len(frame) == 0:
        raise ParseError(f"{path} has no data rows")
    names = [c for c in frame.columns if c.startswith("f") and c[1:].isdigit()]
    if not names:
        raise MissingColumnError("no feature columns f0..f{d-1} found")
    names.sort(key=lambda c: int(c[1:]))
    if names != feature_columns(len(names)):
        raise MissingColumnError(f"feature columns are not contiguous: {', '.join(names)}")
    features = np.column_stack([_parse_floats(frame[c], c) for c in names])
    return FeatureDataset(
        features=features,
        labels=_parse_labels(_require(frame, "label"), "label"),
        group=_require(frame, "group").to_numpy(dtype=object),
        month=_parse_months(_require(frame, "month"), "month"),
    )


def split_by_month(data: Part, train: MonthRange, test: MonthRange) -> Tuple[Part, Part]:
    """
    Partition rows by month tag, preserving order inside each part. Rows in
    neither range are dropped.
    """
    if train.overlaps(test):
        raise InvalidArgument(f"train months {train.start}-{train.end} overlap test months {test.start}-{test.end}")
    if data.month is None:
        raise MissingColumnError("month tags are required to split by month")
    train_idx = np.flatnonzero(train.contains(data.month))
    test_idx = np.flatnonzero(test.contains(data.month))
    return data.subset(train_idx), data.subset(test_idx)
