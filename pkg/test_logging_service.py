"""
Tests for the logging service module.

Covers the structured and human readable formatters, the LoggingService
configuration and the operation, level-result and error records that the
numerical services emit.
"""

import unittest
import logging
import json
import tempfile
import os
from datetime import datetime
from unittest.mock import patch
from io import StringIO

import numpy as np

from services.logging_service import (
    LoggingService, StructuredFormatter, HumanReadableFormatter,
    LogEntry, configure_logging, get_logger, log_operation, log_level_result, log_error,
    get_logging_service
)


def _record(level=logging.INFO, msg="Test message"):
    return logging.LogRecord(
        name="test.logger",
        level=level,
        pathname="test.py",
        lineno=42,
        msg=msg,
        args=(),
        exc_info=None
    )


class TestLogEntry(unittest.TestCase):
    """Test LogEntry data class."""

    def test_log_entry_to_dict(self):
        """Test converting log entry to dictionary."""
        entry = LogEntry(
            timestamp="2024-01-01T12:00:00",
            level="INFO",
            logger_name="test.logger",
            message="Test message"
        )

        expected = {
            'timestamp': "2024-01-01T12:00:00",
            'level': "INFO",
            'logger_name': "test.logger",
            'message': "Test message",
            'module': None,
            'function': None,
            'line_number': None,
            'extra_data': None
        }
        self.assertEqual(entry.to_dict(), expected)

    def test_log_entry_to_json_with_numpy_values(self):
        """numpy scalars in extra data serialize as plain numbers."""
        entry = LogEntry(
            timestamp="2024-01-01T12:00:00",
            level="INFO",
            logger_name="services.fem_service",
            message="Operation cg_solve SUCCESS",
            extra_data={'iterations': np.int64(17), 'relative_residual': np.float64(1e-11)}
        )

        parsed = json.loads(entry.to_json())

        self.assertEqual(parsed['extra_data']['iterations'], 17)
        self.assertAlmostEqual(parsed['extra_data']['relative_residual'], 1e-11)


class TestStructuredFormatter(unittest.TestCase):
    """Test StructuredFormatter class."""

    def setUp(self):
        self.formatter = StructuredFormatter()

    def test_format_basic_record(self):
        parsed = json.loads(self.formatter.format(_record()))

        self.assertEqual(parsed['level'], "INFO")
        self.assertEqual(parsed['logger_name'], "test.logger")
        self.assertEqual(parsed['message'], "Test message")
        self.assertIn('timestamp', parsed)

    def test_format_record_with_extra_data(self):
        record = _record()
        record.extra_data = {"vertices": 113, "h_max": 0.25}

        parsed = json.loads(self.formatter.format(record))

        self.assertEqual(parsed['extra_data'], {"vertices": 113, "h_max": 0.25})


class TestHumanReadableFormatter(unittest.TestCase):
    """Test HumanReadableFormatter class."""

    def setUp(self):
        self.formatter = HumanReadableFormatter(use_colors=False)

    def test_format_basic_record(self):
        record = _record()
        result = self.formatter.format(record)

        self.assertIn("INFO", result)
        self.assertIn("test.logger", result)
        self.assertIn("Test message", result)
        self.assertIn(str(datetime.fromtimestamp(record.created).year), result)

    def test_format_record_with_extra_data(self):
        record = _record()
        record.extra_data = {"run": "omega270_dscm"}

        result = self.formatter.format(record)

        self.assertIn('"run": "omega270_dscm"', result)

    def test_format_debug_record_includes_location(self):
        record = _record(level=logging.DEBUG, msg="Debug message")
        record.filename = "test.py"

        result = self.formatter.format(record)

        self.assertIn("[test.py:42]", result)

    def test_long_logger_name_is_shortened(self):
        record = _record()
        record.name = "services.singular_service.boundary"

        result = self.formatter.format(record)

        self.assertIn("...", result)
        self.assertNotIn("services.singular_service.boundary", result)


class TestLoggingService(unittest.TestCase):
    """Test LoggingService class."""

    def setUp(self):
        self.service = LoggingService()

    def tearDown(self):
        self.service.shutdown()

    def test_configure_basic(self):
        self.service.configure(level="DEBUG")

        self.assertTrue(self.service._configured)
        self.assertEqual(self.service._log_level, logging.DEBUG)
        self.assertFalse(self.service._use_structured_format)
        self.assertIsNone(self.service._log_file_path)

    def test_configure_with_file_writes_json_lines(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            log_file = os.path.join(temp_dir, "logs", "run.log")

            self.service.configure(level="INFO", log_file_path=log_file)
            self.service.log_operation("services.fem_service", "assemble_stiffness",
                                       duration_ms=1.5, extra_data={'vertices': 8})
            self.service.shutdown()

            with open(log_file, encoding='utf-8') as f:
                lines = [json.loads(line) for line in f if line.strip()]

        records = [r for r in lines if r['extra_data'] and r['extra_data'].get('operation')]
        self.assertEqual(records[-1]['extra_data']['operation'], "assemble_stiffness")
        self.assertEqual(records[-1]['extra_data']['vertices'], 8)

    def test_configure_twice_keeps_first_configuration(self):
        self.service.configure(level="WARNING")
        self.service.configure(level="DEBUG")

        self.assertEqual(self.service._log_level, logging.WARNING)

    def test_get_logger(self):
        self.service.configure()

        logger1 = self.service.get_logger("test.logger1")
        logger2 = self.service.get_logger("test.logger2")

        self.assertIs(logger1, self.service.get_logger("test.logger1"))
        self.assertIsNot(logger1, logger2)

    def test_log_operation(self):
        with patch('sys.stderr', new_callable=StringIO) as mock_stderr:
            self.service.configure(level="INFO")

            self.service.log_operation(
                logger_name="test.logger",
                operation="refine_to_graded",
                duration_ms=123.45,
                success=True,
                extra_data={"sweeps": 12}
            )

            output = mock_stderr.getvalue()
            self.assertIn("refine_to_graded", output)
            self.assertIn("SUCCESS", output)
            self.assertIn("123.45ms", output)

    def test_log_failed_operation(self):
        with patch('sys.stderr', new_callable=StringIO) as mock_stderr:
            self.service.configure(level="INFO")

            self.service.log_operation(
                logger_name="test.logger",
                operation="cg_solve",
                level="ERROR",
                success=False,
                error_message="CG did not converge"
            )

            output = mock_stderr.getvalue()
            self.assertIn("FAILED", output)
            self.assertIn("CG did not converge", output)

    def test_log_level_result(self):
        with patch('sys.stderr', new_callable=StringIO) as mock_stderr:
            self.service.configure(level="INFO")

            self.service.log_level_result(
                logger_name="test.logger",
                run="omega270_standard",
                level=3,
                unknowns=2265,
                error=0.0123,
                eoc=0.6667,
                duration_ms=50.0
            )

            output = mock_stderr.getvalue()
            self.assertIn("omega270_standard level 3", output)
            self.assertIn("N=2265", output)
            self.assertIn("eoc=0.667", output)

    def test_log_level_result_first_level_has_no_eoc(self):
        with patch('sys.stderr', new_callable=StringIO) as mock_stderr:
            self.service.configure(level="INFO")

            self.service.log_level_result("test.logger", "omega270_dscm", 0, 113, 0.5)

            output = mock_stderr.getvalue()
            self.assertIn("N=113", output)
            self.assertNotIn("eoc=", output)

    def test_log_error(self):
        with patch('sys.stderr', new_callable=StringIO) as mock_stderr:
            self.service.configure(level="ERROR")

            try:
                raise ValueError("Test error")
            except ValueError as e:
                self.service.log_error(
                    logger_name="test.logger",
                    error=e,
                    context="Experiment omega270_dscm failed at level 2",
                )

            output = mock_stderr.getvalue()
            self.assertIn("ValueError", output)
            self.assertIn("Test error", output)
            self.assertIn("failed at level 2", output)

    def test_get_log_stats(self):
        self.service.configure(level="DEBUG", use_structured_format=True)
        self.service.get_logger("test.logger1")
        self.service.get_logger("test.logger2")

        stats = self.service.get_log_stats()

        self.assertTrue(stats['configured'])
        self.assertEqual(stats['log_level'], "DEBUG")
        self.assertTrue(stats['structured_format'])
        self.assertIsNone(stats['log_file'])
        self.assertGreaterEqual(stats['loggers_count'], 2)

    def test_shutdown(self):
        self.service.configure()
        self.service.get_logger("test.logger")

        self.service.shutdown()

        self.assertFalse(self.service._configured)
        self.assertEqual(len(self.service._loggers), 0)


class TestGlobalFunctions(unittest.TestCase):
    """Test global logging functions."""

    def setUp(self):
        import services.logging_service
        services.logging_service._logging_service = None

    def tearDown(self):
        get_logging_service().shutdown()

    def test_configure_logging(self):
        configure_logging(level="DEBUG", use_structured_format=True)

        service = get_logging_service()
        self.assertTrue(service._configured)
        self.assertEqual(service._log_level, logging.DEBUG)
        self.assertTrue(service._use_structured_format)

    def test_get_logger(self):
        configure_logging()

        logger = get_logger("test.logger")
        self.assertEqual(logger.name, "test.logger")

    def test_log_operation_global(self):
        with patch('sys.stderr', new_callable=StringIO) as mock_stderr:
            configure_logging(level="INFO")

            log_operation(logger_name="test.logger", operation="uniform_refine", success=True)

            self.assertIn("uniform_refine", mock_stderr.getvalue())

    def test_log_level_result_global(self):
        with patch('sys.stderr', new_callable=StringIO) as mock_stderr:
            configure_logging(level="INFO", use_structured_format=True)

            log_level_result("test.logger", "omega355_graded_mu0.3", 1, 500, 0.1, 0.9)

            records = [json.loads(line) for line in mock_stderr.getvalue().splitlines() if line]
            data = records[-1]['extra_data']
            self.assertEqual(data['run'], "omega355_graded_mu0.3")
            self.assertEqual(data['unknowns'], 500)
            self.assertAlmostEqual(data['eoc'], 0.9)

    def test_log_error_global(self):
        with patch('sys.stderr', new_callable=StringIO) as mock_stderr:
            configure_logging(level="ERROR")

            try:
                raise RuntimeError("Global error")
            except RuntimeError as e:
                log_error(logger_name="test.logger", error=e)

            output = mock_stderr.getvalue()
            self.assertIn("RuntimeError", output)
            self.assertIn("Global error", output)


if __name__ == '__main__':
    unittest.main()
