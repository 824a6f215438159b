# app/crud/records.py
import math
from pathlib import Path
from typing import Any, Dict, List

import pandas as pd
from pydantic import ValidationError

from app.core.config import RESULT_SCHEMA_VERSION
from app.core.errors import ParseError, SchemaError
from app.crud.artifacts import _check_version, read_json, write_json
from app.crud.scores import FLOAT_FORMAT, _require, read_raw_csv, write_frame
from app.models.experiment import RECORD_METRICS, ExperimentRecord, ExperimentResult

RECORD_COLUMNS = ["variant", "method", "bootstrap", *RECORD_METRICS, "threshold"]
UNDEFINED_TOKEN = "undefined"


def _format_value(value: float) -> str:
    return UNDEFINED_TOKEN if math.isnan(value) else FLOAT_FORMAT % value


def save_records(records: List[ExperimentRecord], path: str | Path) -> None:
    """One CSV row per (variant, method, bootstrap); undefined metrics written as 'undefined'"""
    rows = []
    for record in records:
        row = {"variant": record.variant.value, "method": record.method.value, "bootstrap": str(record.bootstrap)}
        for name in (*RECORD_METRICS, "threshold"):
            row[name] = _format_value(getattr(record, name))
        rows.append(row)
    write_frame(pd.DataFrame(rows, columns=RECORD_COLUMNS), path)


def _parse_metric(token: str, name: str, row: int) -> float:
    if token == UNDEFINED_TOKEN:
        return float("nan")
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"{name} value {token!r} is not numeric", row=row)


def load_records(path: str | Path) -> List[ExperimentRecord]:
    frame = read_raw_csv(path)
    for column in RECORD_COLUMNS:
        _require(frame, column)
    records = []
    for row, raw in enumerate(frame.to_dict(orient="records")):
        values: Dict[str, Any] = {
            name: _parse_metric(raw[name], name, row) for name in (*RECORD_METRICS, "threshold")
        }
        try:
            bootstrap = int(raw["bootstrap"])
        except ValueError:
            raise ParseError(f"bootstrap index {raw['bootstrap']!r} is not an integer", row=row)
        try:
            records.append(ExperimentRecord(
                variant=raw["variant"], method=raw["method"], bootstrap=bootstrap, **values
            ))
        except ValidationError as e:
            raise SchemaError(f"invalid record: {e.errors()[0]['msg']}", row=row)
    return records


def save_summary(result: ExperimentResult, path: str | Path) -> None:
    """Aggregates, p-values, skipped bootstraps, frozen thresholds and their sources as JSON"""
    document = {"schema_version": RESULT_SCHEMA_VERSION}
    document.update(result.model_dump(mode="json", exclude={"records"}))
    write_json(document, path)


def load_summary(path: str | Path) -> Dict[str, Any]:
    document = read_json(path)
    _check_version(document, RESULT_SCHEMA_VERSION, "summary")
    return document
