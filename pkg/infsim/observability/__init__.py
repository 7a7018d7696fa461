"""
infsim Observability Module

Structured logging with run correlation for simulations and sweeps.
"""

from .logging import (
    setup_json_logging,
    get_logger,
    set_run_context,
    clear_run_context,
    JSONFormatter,
    TextFormatter,
    StructuredLogger,
)

__all__ = [
    "setup_json_logging",
    "get_logger",
    "set_run_context",
    "clear_run_context",
    "JSONFormatter",
    "TextFormatter",
    "StructuredLogger",
]
