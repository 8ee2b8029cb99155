"""
Tests for the log formatters.
"""

import json
import logging

from wickbench.logging_config import CompactFormatter, JSONFormatter, configure_logging


def make_record(name="wickbench.realtime", **extra):
    record = logging.LogRecord(name, logging.WARNING, __file__, 1, "step %s", ("ok",), None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


class TestFormatters:
    """Test JSON and compact output."""

    def test_json_fields(self):
        """JSON lines carry level, logger, message and structured extras."""
        entry = json.loads(JSONFormatter().format(make_record(error_type="UnitarityLost")))
        assert entry["level"] == "WARNING"
        assert entry["logger"] == "wickbench.realtime"
        assert entry["message"] == "step ok"
        assert entry["error_type"] == "UnitarityLost"
        assert "worker" not in entry

    def test_json_worker_tag(self):
        """Records from pool workers name their process."""
        record = make_record()
        record.processName = "ForkPoolWorker-1"
        assert json.loads(JSONFormatter().format(record))["worker"] == "ForkPoolWorker-1"

    def test_compact_strips_prefix(self):
        """The compact format drops the package prefix."""
        line = CompactFormatter().format(make_record())
        assert " - realtime - WARNING - step ok" in line

    def test_configure_replaces_handlers(self):
        """Reconfiguring leaves a single root handler."""
        root = logging.getLogger()
        saved = (root.level, list(root.handlers))
        try:
            configure_logging("DEBUG")
            configure_logging("INFO", json_format=True)
            assert len(root.handlers) == 1
            assert isinstance(root.handlers[0].formatter, JSONFormatter)
            assert root.level == logging.INFO
        finally:
            for handler in list(root.handlers):
                root.removeHandler(handler)
            root.setLevel(saved[0])
            for handler in saved[1]:
                root.addHandler(handler)
