# app/core/config.py
import os
from dotenv import load_dotenv

from app.core.errors import ConfigError

load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a number, got {raw!r}")


LOG_LEVEL = os.getenv("CALTK_LOG_LEVEL", "INFO").upper()
MASTER_SEED = _env_int("CALTK_MASTER_SEED", 0)
TARGET_RECALL = _env_float("CALTK_TARGET_RECALL", 0.95)
TARGET_FPR = _env_float("CALTK_TARGET_FPR", 0.05)
ECE_BINS = _env_int("CALTK_ECE_BINS", 15)
N_BOOTSTRAPS = _env_int("CALTK_N_BOOTSTRAPS", 20)
JOBS = _env_int("CALTK_JOBS", 1)
SIGNIFICANCE_ALPHA = _env_float("CALTK_SIGNIFICANCE_ALPHA", 0.01)

# Decision service
API_HOST = os.getenv("CALTK_API_HOST", "0.0.0.0")
API_PORT = _env_int("CALTK_API_PORT", 8000)

# Schema versions of the JSON artifacts written by the toolkit
CALIBRATOR_SCHEMA_VERSION = 1
POLICY_SCHEMA_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1
RESULT_SCHEMA_VERSION = 1
