"""Online algorithm selection for a simulated production process."""

import os
from pathlib import Path

_data = Path(__file__).parent / "data"
if (_data / "vps_seed.csv").exists():
    os.environ.setdefault("CAAI_DATA_DIR", str(_data))

from ._caai import (  # noqa: E402
    ConfigurationError,
    Error,
    GPModel,
    VpsSimulator,
    compose_pipelines,
    default_kb_yaml,
    main,
    pearson,
    rate_pipelines,
    run,
    run_optimizer,
    simulate,
)

__all__ = [
    "ConfigurationError",
    "Error",
    "GPModel",
    "VpsSimulator",
    "compose_pipelines",
    "default_kb_yaml",
    "main",
    "pearson",
    "rate_pipelines",
    "run",
    "run_optimizer",
    "simulate",
]
