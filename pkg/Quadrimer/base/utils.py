import os
from pathlib import Path

WORKERS_ENV_VAR = "QUADRIMER_WORKERS"


def get_app_dir() -> Path:
    return Path(__file__).parent.parent


def get_default_output_dir() -> Path:
    return get_app_dir() / "output"


def get_worker_count(default: int = 1) -> int:
    value = os.environ.get(WORKERS_ENV_VAR)
    if not value:
        return default
    # Malformed values fall back to the default.
    try:
        return max(1, int(value))
    except ValueError:
        return default
