"""
Tests for structured logging.
"""

import io
import json
import logging
import sys

import pytest

from infsim.observability.logging import (
    JSONFormatter,
    StructuredLogger,
    TextFormatter,
    clear_run_context,
    get_logger,
    set_run_context,
    setup_json_logging,
)


def make_record(msg="Test message", level=logging.INFO, extra=None, exc_info=None):
    record = logging.LogRecord(
        name="infsim.test",
        level=level,
        pathname="/path/to/solver.py",
        lineno=42,
        msg=msg,
        args=(),
        exc_info=exc_info,
    )
    if extra is not None:
        record.extra = extra
    return record


@pytest.fixture(autouse=True)
def no_run_context():
    clear_run_context()
    yield
    clear_run_context()


@pytest.mark.unit
class TestJSONFormatter:
    """Test JSON log formatter."""

    def test_format_basic_message(self):
        parsed = json.loads(JSONFormatter().format(make_record()))
        assert parsed["level"] == "INFO"
        assert parsed["logger"] == "infsim.test"
        assert parsed["message"] == "Test message"
        assert "timestamp" in parsed
        assert parsed["source"]["line"] == 42
        assert "run_id" not in parsed

    def test_format_with_extra(self):
        parsed = json.loads(JSONFormatter().format(make_record(extra={"eps": 0.1, "steps": 500})))
        assert parsed["extra"] == {"eps": 0.1, "steps": 500}

    def test_format_with_run_context(self):
        set_run_context("eps=0.05", 0.05)
        parsed = json.loads(JSONFormatter().format(make_record()))
        assert parsed["run_id"] == "eps=0.05"
        assert parsed["eps"] == 0.05

    def test_format_with_exception(self):
        try:
            raise ValueError("density vanished")
        except ValueError:
            exc_info = sys.exc_info()
        parsed = json.loads(JSONFormatter().format(make_record(level=logging.ERROR, exc_info=exc_info)))
        assert parsed["exception"]["type"] == "ValueError"
        assert "density vanished" in parsed["exception"]["message"]


@pytest.mark.unit
class TestTextFormatter:
    def test_single_line(self):
        set_run_context("eps=0.1", 0.1)
        line = TextFormatter().format(make_record(level=logging.WARNING, extra={"t": 0.5}))
        assert line.startswith("[WARNING] infsim.test: Test message")
        assert "run_id=eps=0.1" in line
        assert "t=0.5" in line
        assert "\n" not in line


@pytest.mark.unit
class TestStructuredLogger:
    """Event helpers attach an `event` field and their arguments."""

    def test_run_started(self, caplog):
        logger = get_logger("infsim.test.events")
        with caplog.at_level(logging.INFO, logger="infsim.test.events"):
            logger.run_started(eps=0.1, t_end=5.0, steps=5000)
        record = caplog.records[-1]
        assert record.getMessage() == "Run started"
        assert record.extra == {"eps": 0.1, "t_end": 5.0, "steps": 5000, "event": "run.started"}

    def test_boundary_clamped_is_warning(self, caplog):
        logger = get_logger("infsim.test.events")
        with caplog.at_level(logging.INFO, logger="infsim.test.events"):
            logger.boundary_clamped(t=1.5, clamped_fraction=1e-6)
        record = caplog.records[-1]
        assert record.levelno == logging.WARNING
        assert record.extra["event"] == "run.clamped"

    def test_sweep_row_failed_is_error(self, caplog):
        logger = get_logger("infsim.test.events")
        with caplog.at_level(logging.INFO, logger="infsim.test.events"):
            logger.sweep_row_failed(0.05, "grid too coarse")
        record = caplog.records[-1]
        assert record.levelno == logging.ERROR
        assert record.extra["error"] == "grid too coarse"

    def test_snapshot_is_debug(self, caplog):
        logger = get_logger("infsim.test.events")
        with caplog.at_level(logging.INFO, logger="infsim.test.events"):
            logger.snapshot_taken(t=0.5, log_mass=1.2)
        assert not caplog.records

    def test_get_logger(self):
        logger = get_logger("infsim.test.module")
        assert isinstance(logger, StructuredLogger)
        assert logger.logger.name == "infsim.test.module"


@pytest.mark.unit
class TestSetupJsonLogging:
    def test_configures_named_logger(self):
        logger = setup_json_logging(level=logging.WARNING, logger_name="infsim.test.setup")
        assert logger.name == "infsim.test.setup"
        assert logger.level == logging.WARNING
        assert len(logger.handlers) == 1
        assert isinstance(logger.handlers[0].formatter, JSONFormatter)

    def test_text_format_replaces_handlers(self):
        setup_json_logging(logger_name="infsim.test.setup")
        logger = setup_json_logging(json_format=False, logger_name="infsim.test.setup")
        assert len(logger.handlers) == 1
        assert isinstance(logger.handlers[0].formatter, TextFormatter)

    def test_emits_json_lines(self):
        logger = setup_json_logging(level=logging.INFO, logger_name="infsim.test.stream")
        stream = io.StringIO()
        logger.handlers[0].setStream(stream)
        get_logger("infsim.test.stream.child").info("Run completed", valid=True)
        parsed = json.loads(stream.getvalue().strip())
        assert parsed["message"] == "Run completed"
        assert parsed["extra"] == {"valid": True}
