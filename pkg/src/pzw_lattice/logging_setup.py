"""
Structured logging (structlog over stdlib logging), written to stderr.

Numeric context is logged as-is: numpy scalars become Python numbers and arrays
are summarized by shape, dtype and max-abs so that a residual or a field never
floods a log line or breaks the JSON renderer.
"""

from __future__ import annotations

import logging
import os
import sys
from typing import Any

import numpy as np
import structlog

LOGGER_NAME = "pzw_lattice"


def _numpy_context(_logger: Any, _method: str, event_dict: dict[str, Any]) -> dict[str, Any]:
    for key, value in event_dict.items():
        if isinstance(value, np.generic):
            event_dict[key] = value.item()
        elif isinstance(value, np.ndarray):
            peak = float(np.abs(value).max()) if value.size and np.issubdtype(value.dtype, np.number) else None
            event_dict[key] = {"shape": list(value.shape), "dtype": str(value.dtype), "max_abs": peak}
    return event_dict


def setup_logging() -> structlog.stdlib.BoundLogger:
    level = os.environ.get("LOG_LEVEL", "info").upper()
    production = os.environ.get("PZW_ENV") == "production"
    # stdout belongs to CLI results
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, level, logging.INFO),
    )
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            _numpy_context,
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            (
                structlog.processors.JSONRenderer()
                if production
                else structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty())
            ),
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )
    return structlog.get_logger(LOGGER_NAME)


def get_logger(**context: Any) -> structlog.stdlib.BoundLogger:
    """Package logger with `context` bound, e.g. get_logger(scenario="quick", check="continuity")."""
    return log.bind(**context)


log = setup_logging()
