"""
Structured JSON Logging for infsim

Provides consistent, machine-parseable log output for long simulation runs
and parameter sweeps.
"""

import logging
import json
import sys
import traceback
from datetime import datetime, timezone
from typing import Optional, Dict, Any
from contextvars import ContextVar

# Context variable for run correlation (one value per sweep worker)
_run_context: ContextVar[Optional[Dict[str, Any]]] = ContextVar(
    "run_context", default=None
)


class JSONFormatter(logging.Formatter):
    """
    JSON log formatter for structured logging.

    Output format:
    {
        "timestamp": "2024-01-15T10:30:00.000Z",
        "level": "INFO",
        "logger": "infsim.runtime.solver",
        "message": "Run started",
        "run_id": "eps=0.1",
        "eps": 0.1,
        "extra": {...}
    }
    """

    def format(self, record: logging.LogRecord) -> str:
        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }

        run_ctx = _run_context.get()
        if run_ctx:
            log_entry.update(run_ctx)

        if hasattr(record, "extra") and record.extra:
            log_entry["extra"] = record.extra

        if record.exc_info:
            log_entry["exception"] = {
                "type": record.exc_info[0].__name__ if record.exc_info[0] else None,
                "message": str(record.exc_info[1]) if record.exc_info[1] else None,
                "traceback": (
                    traceback.format_exception(*record.exc_info)
                    if record.exc_info[0]
                    else None
                ),
            }

        log_entry["source"] = {
            "file": record.pathname,
            "line": record.lineno,
            "function": record.funcName,
        }

        return json.dumps(log_entry, default=str)


class TextFormatter(logging.Formatter):
    """Single-line human-readable formatter with run context and extras."""

    def format(self, record: logging.LogRecord) -> str:
        line = f"[{record.levelname:7}] {record.name}: {record.getMessage()}"
        run_ctx = _run_context.get()
        if run_ctx:
            line += " " + " ".join(f"{k}={v}" for k, v in run_ctx.items())
        if hasattr(record, "extra") and record.extra:
            line += " " + " ".join(f"{k}={v}" for k, v in record.extra.items())
        return line


class StructuredLogger:
    """
    Wrapper around standard logger with structured logging support.
    """

    def __init__(self, name: str):
        self.logger = logging.getLogger(name)

    def _log(
        self, level: int, message: str, extra: Optional[Dict[str, Any]] = None, **kwargs
    ):
        record_extra = dict(extra or {})
        record_extra.update(kwargs)
        self.logger.log(
            level, message, extra={"extra": record_extra} if record_extra else None
        )

    def debug(self, message: str, **kwargs):
        self._log(logging.DEBUG, message, **kwargs)

    def info(self, message: str, **kwargs):
        self._log(logging.INFO, message, **kwargs)

    def warning(self, message: str, **kwargs):
        self._log(logging.WARNING, message, **kwargs)

    def error(self, message: str, exc_info: bool = False, **kwargs):
        self.logger.error(
            message, exc_info=exc_info, extra={"extra": kwargs} if kwargs else None
        )

    # Simulation-specific logging methods
    def run_started(self, eps: float, t_end: float, steps: int, **kwargs):
        self.info(
            "Run started",
            eps=eps,
            t_end=t_end,
            steps=steps,
            event="run.started",
            **kwargs,
        )

    def run_completed(self, eps: float, duration_ms: float, valid: bool, **kwargs):
        self.info(
            "Run completed",
            eps=eps,
            duration_ms=duration_ms,
            valid=valid,
            event="run.completed",
            **kwargs,
        )

    def snapshot_taken(self, t: float, log_mass: float, **kwargs):
        self.debug(
            f"Snapshot at t={t:.4f}",
            t=t,
            log_mass=log_mass,
            event="run.snapshot",
            **kwargs,
        )

    def boundary_clamped(self, t: float, clamped_fraction: float, **kwargs):
        self.warning(
            "Boundary clamp exceeded tolerance; run flagged invalid",
            t=t,
            clamped_fraction=clamped_fraction,
            event="run.clamped",
            **kwargs,
        )

    def assumption_failed(self, assumption: str, value: float, **kwargs):
        self.warning(
            f"Assumption not satisfied: {assumption}",
            assumption=assumption,
            value=value,
            event="assumption.failed",
            **kwargs,
        )

    def sweep_row_failed(self, eps: float, error: str, **kwargs):
        self.error(
            "Sweep row failed",
            eps=eps,
            error=error,
            event="sweep.row_failed",
            **kwargs,
        )


def set_run_context(run_id: str, eps: Optional[float] = None):
    """Set run context for log correlation."""
    ctx: Dict[str, Any] = {"run_id": run_id}
    if eps is not None:
        ctx["eps"] = eps
    _run_context.set(ctx)


def clear_run_context():
    """Clear run context."""
    _run_context.set(None)


def setup_json_logging(
    level: int = logging.INFO,
    json_format: bool = True,
    logger_name: Optional[str] = "infsim",
):
    """
    Configure structured logging.

    Args:
        level: Logging level (default: INFO)
        json_format: JSON lines when True, single-line text otherwise
        logger_name: Logger to configure (default: the infsim package logger)
    """
    formatter = JSONFormatter() if json_format else TextFormatter()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(formatter)

    logger = logging.getLogger(logger_name)
    logger.setLevel(level)
    logger.handlers = []  # Clear existing handlers
    logger.addHandler(handler)

    return logger


def get_logger(name: str) -> StructuredLogger:
    """Get a structured logger instance."""
    return StructuredLogger(name)


__all__ = [
    "JSONFormatter",
    "TextFormatter",
    "StructuredLogger",
    "setup_json_logging",
    "get_logger",
    "set_run_context",
    "clear_run_context",
]
