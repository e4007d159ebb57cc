"""
Unit tests for ErrorHandler

Tests the conversion of numerical, configuration and I/O exceptions into
coded diagnostics and the single-line rendering used by the CLI.
"""

import json
import logging
import unittest
from unittest.mock import Mock

from config.config_validator import ConfigValidationError
from services.error_handler import ErrorHandler
from models.error_models import (
    ErrorDiagnostic, FemErrorCodes, FemError, MeshError, GradingError, AssemblyError,
    SolverConvergenceError, TraceMismatchError, QuadratureAccuracyError, SingularEvaluationError
)


class TestErrorHandler(unittest.TestCase):
    """Test suite for ErrorHandler implementation"""

    def setUp(self):
        self.mock_logger = Mock(spec=logging.Logger)
        self.error_handler = ErrorHandler(logger=self.mock_logger)

    def test_create_error_basic(self):
        """Test basic error creation"""
        error = self.error_handler.create_error(FemErrorCodes.MESH_INVALID, "Broken mesh", {"triangle": 4})

        self.assertIsInstance(error, ErrorDiagnostic)
        self.assertEqual(error.code, FemErrorCodes.MESH_INVALID)
        self.assertEqual(error.message, "Broken mesh")
        self.assertEqual(error.data, {"triangle": 4})
        self.mock_logger.error.assert_called_once()

    def test_create_error_without_data(self):
        error = self.error_handler.create_error(FemErrorCodes.INTERNAL, "Test error")

        self.assertIsNone(error.data)

    def test_create_config_error(self):
        error = self.error_handler.create_config_error(["Levels must be an integer >= 2"])

        self.assertEqual(error.code, FemErrorCodes.CONFIG_INVALID)
        self.assertEqual(error.message, "Invalid configuration")
        self.assertEqual(error.data["errors"], ["Levels must be an integer >= 2"])

    def test_create_invalid_input_error(self):
        error = self.error_handler.create_invalid_input_error("Unknown preset")

        self.assertEqual(error.code, FemErrorCodes.INVALID_INPUT)
        self.assertEqual(error.data["details"], "Unknown preset")

    def test_create_io_error(self):
        error = self.error_handler.create_io_error("results/ is read-only")

        self.assertEqual(error.code, FemErrorCodes.IO_FAILED)
        self.assertEqual(error.message, "I/O error")

    def test_create_internal_error_default(self):
        error = self.error_handler.create_internal_error()

        self.assertEqual(error.code, FemErrorCodes.INTERNAL)
        self.assertEqual(error.data["details"], "Internal error")

    def test_handle_numerical_errors_keep_their_codes(self):
        """Each numerical exception maps onto its own code"""
        cases = [
            (MeshError("bad"), FemErrorCodes.MESH_INVALID),
            (GradingError("bad"), FemErrorCodes.GRADING_FAILED),
            (AssemblyError("bad"), FemErrorCodes.ASSEMBLY_FAILED),
            (SolverConvergenceError("bad"), FemErrorCodes.SOLVER_DIVERGED),
            (TraceMismatchError("bad"), FemErrorCodes.TRACE_MISMATCH),
            (QuadratureAccuracyError("bad"), FemErrorCodes.QUADRATURE_INACCURATE),
            (SingularEvaluationError("bad"), FemErrorCodes.SINGULAR_EVALUATION),
            (FemError("bad"), FemErrorCodes.INTERNAL),
        ]
        for exception, code in cases:
            with self.subTest(exception=type(exception).__name__):
                self.assertEqual(self.error_handler.handle_exception(exception).code, code)

    def test_handle_fem_error_carries_data(self):
        exception = SolverConvergenceError("CG did not converge in 100 iterations",
                                           {"iterations": 100, "relative_residual": 1e-3})

        error = self.error_handler.handle_exception(exception, "cg_solve")

        self.assertEqual(error.message, "cg_solve: CG did not converge in 100 iterations")
        self.assertEqual(error.data["iterations"], 100)

    def test_handle_fem_error_without_data(self):
        error = self.error_handler.handle_exception(MeshError("Mesh is not conforming"))

        self.assertIsNone(error.data)

    def test_handle_config_validation_error(self):
        exception = ConfigValidationError("Configuration validation failed with 1 error(s)",
                                          ["Interior angle omega_degrees must lie in (0, 360)"])

        error = self.error_handler.handle_exception(exception)

        self.assertEqual(error.code, FemErrorCodes.CONFIG_INVALID)
        self.assertIn("omega_degrees", error.data["errors"][0])

    def test_handle_value_error(self):
        error = self.error_handler.handle_exception(ValueError("Levels must be at least 1"), "dscm-fem")

        self.assertEqual(error.code, FemErrorCodes.INVALID_INPUT)
        self.assertEqual(error.data["details"], "dscm-fem: Levels must be at least 1")
        self.mock_logger.debug.assert_called_once()

    def test_handle_key_error(self):
        error = self.error_handler.handle_exception(KeyError("method"))

        self.assertEqual(error.code, FemErrorCodes.INVALID_INPUT)

    def test_handle_os_error(self):
        error = self.error_handler.handle_exception(FileNotFoundError("mesh.txt"))

        self.assertEqual(error.code, FemErrorCodes.IO_FAILED)
        self.assertIn("mesh.txt", error.data["details"])

    def test_handle_memory_error(self):
        error = self.error_handler.handle_exception(MemoryError("cannot allocate"))

        self.assertEqual(error.code, FemErrorCodes.INTERNAL)
        self.assertIn("Out of memory", error.data["details"])

    def test_handle_generic_exception(self):
        error = self.error_handler.handle_exception(RuntimeError("Unexpected error"), "tables")

        self.assertEqual(error.code, FemErrorCodes.INTERNAL)
        self.assertIn("tables: Unexpected error", error.data["details"])

    def test_default_logger_initialization(self):
        handler = ErrorHandler()
        error = handler.create_error(FemErrorCodes.INTERNAL, "Test message")

        self.assertEqual(error.message, "Test message")


class TestErrorDiagnostic(unittest.TestCase):
    """Test the diagnostic data class"""

    def test_to_dict(self):
        diagnostic = ErrorDiagnostic(code=21, message="Grading not reached", data={"mu": 0.5})

        self.assertEqual(diagnostic.to_dict(), {"code": 21, "message": "Grading not reached",
                                                "data": {"mu": 0.5}})

    def test_to_dict_without_data(self):
        self.assertEqual(ErrorDiagnostic(code=99, message="x").to_dict(), {"code": 99, "message": "x"})

    def test_to_line_is_single_line(self):
        diagnostic = ErrorDiagnostic(code=31, message="CG did not converge",
                                     data={"residual": 0.1, "iterations": 5})

        line = diagnostic.to_line()

        self.assertNotIn("\n", line)
        self.assertTrue(line.startswith("error 31: CG did not converge "))
        self.assertEqual(json.loads(line.split(" ", 6)[-1]), {"iterations": 5, "residual": 0.1})

    def test_to_line_without_data(self):
        self.assertEqual(ErrorDiagnostic(code=20, message="Mesh is not conforming").to_line(),
                         "error 20: Mesh is not conforming")


if __name__ == '__main__':
    unittest.main()
