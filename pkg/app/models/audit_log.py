# app/models/audit_log.py
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app import __version__
from app.core.config import MANIFEST_SCHEMA_VERSION


class AuditAction(str, Enum):
    DATASET_GENERATED = "dataset_generated"
    SCORES_LOADED = "scores_loaded"
    CALIBRATOR_FITTED = "calibrator_fitted"
    CALIBRATION_APPLIED = "calibration_applied"
    THRESHOLD_SELECTED = "threshold_selected"
    METRICS_EVALUATED = "metrics_evaluated"
    EXPERIMENT_COMPLETED = "experiment_completed"
    BOOTSTRAP_SKIPPED = "bootstrap_skipped"
    REPORT_RENDERED = "report_rendered"
    OUTPUT_WRITTEN = "output_written"


class AuditEvent(BaseModel):
    action: AuditAction
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    resource: Optional[str] = None  # file path or variant/method key
    details: Optional[Dict[str, Any]] = None


class RunManifest(BaseModel):
    """Everything needed to replay one CLI invocation"""

    schema_version: int = MANIFEST_SCHEMA_VERSION
    command: str
    argv: List[str]
    config: Dict[str, Any] = {}
    seeds: Dict[str, int] = {}
    inputs: Dict[str, str] = {}  # path -> sha256
    outputs: Dict[str, str] = {}  # path -> sha256
    toolkit_version: str = __version__
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    events: List[AuditEvent] = []
