# app/utils/audit_logger.py
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from app.core.config import MANIFEST_SCHEMA_VERSION
from app.core.errors import InputFileError, ReplayMismatch, SchemaError
from app.crud.artifacts import _check_version, file_digest, read_json, write_json
from app.models.audit_log import AuditAction, AuditEvent, RunManifest

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"


def manifest_path(output: str | Path) -> Path:
    output = Path(output)
    return output.with_name(output.name + MANIFEST_SUFFIX)


class RunAuditLogger:
    """
    Collects the audit trail of one command run and writes it as a manifest
    next to every output file
    """

    def __init__(self, command: str, argv: Sequence[str]):
        self.command = command
        self.argv = list(argv)
        self.config: Dict[str, Any] = {}
        self.seeds: Dict[str, int] = {}
        self.inputs: Dict[str, str] = {}
        self.outputs: Dict[str, str] = {}
        self.events: List[AuditEvent] = []

    def log(self, action: AuditAction, resource: Optional[str] = None, **details: Any) -> AuditEvent:
        event = AuditEvent(action=action, resource=resource, details=details or None)
        self.events.append(event)
        logger.debug("audit %s %s", action.value, resource or "")
        return event

    def set_config(self, config: Dict[str, Any]) -> None:
        self.config = dict(config)

    def add_seed(self, name: str, seed: int) -> None:
        self.seeds[name] = int(seed)

    def log_input(self, path: str | Path, action: AuditAction = AuditAction.SCORES_LOADED) -> None:
        """Record an input file and its digest"""
        self.inputs[str(path)] = file_digest(path)
        self.log(action, str(path))

    def log_output(self, path: str | Path) -> None:
        """Record a written output file and its digest"""
        self.outputs[str(path)] = file_digest(path)
        self.log(AuditAction.OUTPUT_WRITTEN, str(path))

    def manifest(self) -> RunManifest:
        return RunManifest(
            command=self.command,
            argv=self.argv,
            config=self.config,
            seeds=self.seeds,
            inputs=self.inputs,
            outputs=self.outputs,
            events=self.events,
        )

    def write_manifests(self) -> List[Path]:
        """One manifest per output file: <output>.manifest.json"""
        document = self.manifest().model_dump(mode="json")
        written = []
        for output in self.outputs:
            path = manifest_path(output)
            write_json(document, path)
            written.append(path)
        return written


def load_manifest(path: str | Path) -> RunManifest:
    document = read_json(path)
    _check_version(document, MANIFEST_SCHEMA_VERSION, "manifest")
    try:
        return RunManifest.model_validate(document)
    except ValidationError as e:
        raise SchemaError(f"invalid manifest {path}: {e.errors()[0]['msg']}")


def replay_manifest(path: str | Path, run: Callable[[List[str]], int]) -> RunManifest:
    """
    Re-execute the recorded command line through `run` and check that every
    input is unchanged and every output is reproduced byte for byte.
    """
    manifest = load_manifest(path)
    for source, digest in manifest.inputs.items():
        if not Path(source).is_file():
            raise InputFileError(f"recorded input no longer exists: {source}")
        if file_digest(source) != digest:
            raise ReplayMismatch(f"input {source} changed since the recorded run")
    status = run(list(manifest.argv))
    if status != 0:
        raise ReplayMismatch(f"replayed command exited with status {status}")
    for output, digest in manifest.outputs.items():
        if not Path(output).is_file() or file_digest(output) != digest:
            raise ReplayMismatch(f"output {output} differs from the recorded run")
    logger.info("replayed %s: %d outputs identical", manifest.command, len(manifest.outputs))
    return manifest
