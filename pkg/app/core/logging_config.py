# app/core/logging_config.py
import logging

from app.core import config

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def configure_logging(level: str | None = None) -> None:
    """Configure the root logger once for CLI and service processes"""
    resolved = (level or config.LOG_LEVEL).upper()
    logging.basicConfig(level=getattr(logging, resolved, logging.INFO), format=LOG_FORMAT, force=True)
    # uvicorn ships its own handlers; keep it at the same verbosity
    logging.getLogger("uvicorn").setLevel(getattr(logging, resolved, logging.INFO))
