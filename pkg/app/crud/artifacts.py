# app/crud/artifacts.py
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Dict

from pydantic import ValidationError

from app.core.config import CALIBRATOR_SCHEMA_VERSION, POLICY_SCHEMA_VERSION
from app.core.errors import InputFileError, ParseError, SchemaError, UnknownMethod
from app.models.calibration import PARAMS_BY_METHOD, CalibrationMethod, Calibrator
from app.models.policy import ThresholdPolicy
from app.models.score_data import ScoreSpace


def _undefined_to_null(value: Any) -> Any:
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, dict):
        return {k: _undefined_to_null(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_undefined_to_null(v) for v in value]
    return value


def write_json(document: Dict[str, Any], path: str | Path) -> None:
    """Write a JSON document; undefined (NaN) metrics become null"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # json writes floats with repr(), which round-trips every double
    path.write_text(json.dumps(_undefined_to_null(document), indent=2, allow_nan=False) + "\n", encoding="utf-8")


def read_json(path: str | Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise InputFileError(f"file not found: {path}")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ParseError(f"{path} is not valid JSON: {e}")
    if not isinstance(document, dict):
        raise SchemaError(f"{path} must contain a JSON object")
    return document


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _check_version(document: Dict[str, Any], expected: int, kind: str) -> None:
    if "schema_version" not in document:
        raise SchemaError(f"{kind} document has no schema_version field")
    if document["schema_version"] != expected:
        raise SchemaError(
            f"{kind} schema_version {document['schema_version']!r} is not supported (expected {expected})"
        )


def calibrator_to_document(calibrator: Calibrator) -> Dict[str, Any]:
    return {
        "schema_version": CALIBRATOR_SCHEMA_VERSION,
        "method": calibrator.method.value,
        "params": None if calibrator.params is None else calibrator.params.model_dump(mode="json"),
        "score_space": calibrator.score_space.value,
    }


def calibrator_from_document(document: Dict[str, Any]) -> Calibrator:
    _check_version(document, CALIBRATOR_SCHEMA_VERSION, "calibrator")
    try:
        method = CalibrationMethod(document.get("method"))
    except ValueError:
        raise UnknownMethod(f"unknown calibration method {document.get('method')!r}")
    try:
        params_type = PARAMS_BY_METHOD.get(method)
        params = None if params_type is None else params_type.model_validate(document.get("params"))
        return Calibrator(
            method=method,
            params=params,
            score_space=ScoreSpace(document.get("score_space", ScoreSpace.PROBABILITY.value)),
        )
    except (ValidationError, ValueError) as e:
        raise SchemaError(f"invalid {method.value} calibrator document: {e}")


def save_calibrator(calibrator: Calibrator, path: str | Path) -> None:
    write_json(calibrator_to_document(calibrator), path)


def load_calibrator(path: str | Path) -> Calibrator:
    return calibrator_from_document(read_json(path))


def save_policy(policy: ThresholdPolicy, path: str | Path) -> None:
    document = {"schema_version": POLICY_SCHEMA_VERSION}
    document.update(policy.model_dump(mode="json"))
    write_json(document, path)


def load_policy(path: str | Path) -> ThresholdPolicy:
    document = read_json(path)
    _check_version(document, POLICY_SCHEMA_VERSION, "policy")
    body = {k: v for k, v in document.items() if k != "schema_version"}
    try:
        return ThresholdPolicy.model_validate(body)
    except ValidationError as e:
        raise SchemaError(f"invalid policy document: {e}")
