"""
Configuration validation module for DSCM FEM.

This module provides validation functionality for configuration data,
ensuring that all configuration values are valid and consistent.
"""

from typing import List
import math

from .config_models import Config


class ConfigValidationError(Exception):
    """Exception raised when configuration validation fails."""

    def __init__(self, message: str, errors: List[str] = None):
        super().__init__(message)
        self.errors = errors or []


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


class ConfigValidator:
    """Configuration validator class."""

    VALID_METHODS = ["standard", "graded", "dscm"]
    VALID_REGULARIZATIONS = ["l2proj", "carstensen"]
    VALID_PROBLEMS = ["singular_datum", "smooth_sine"]
    VALID_LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

    @classmethod
    def validate(cls, config: Config) -> None:
        """
        Validate configuration object.

        Args:
            config: Configuration object to validate

        Raises:
            ConfigValidationError: If validation fails
        """
        errors = []

        errors.extend(cls._validate_experiment(config.experiment))
        errors.extend(cls._validate_mesh(config.mesh))
        errors.extend(cls._validate_quadrature(config.quadrature))
        errors.extend(cls._validate_solver(config.solver))
        errors.extend(cls._validate_logging(config.logging))

        if errors:
            raise ConfigValidationError(
                f"Configuration validation failed with {len(errors)} error(s)",
                errors
            )

    @classmethod
    def _validate_experiment(cls, experiment) -> List[str]:
        """Validate experiment configuration."""
        errors = []

        if not _is_number(experiment.omega_degrees) or not 0.0 < experiment.omega_degrees < 360.0:
            errors.append("Interior angle omega_degrees must lie in (0, 360)")

        if experiment.method not in cls.VALID_METHODS:
            errors.append(f"Method must be one of: {cls.VALID_METHODS}")

        if experiment.method == "graded":
            if not _is_number(experiment.mu) or not 0.0 < experiment.mu <= 1.0:
                errors.append("Grading parameter mu must lie in (0, 1] for the graded method")

        if not _is_int(experiment.levels) or experiment.levels < 2:
            errors.append("Levels must be an integer >= 2")

        if experiment.regularization not in cls.VALID_REGULARIZATIONS:
            errors.append(f"Regularization must be one of: {cls.VALID_REGULARIZATIONS}")

        if experiment.problem not in cls.VALID_PROBLEMS:
            errors.append(f"Problem must be one of: {cls.VALID_PROBLEMS}")

        if not _is_number(experiment.datum_exponent) or not 0.0 <= experiment.datum_exponent < 0.5:
            errors.append("Datum exponent must lie in [0, 0.5) so that the datum is in L2")

        if not experiment.output_path or not isinstance(experiment.output_path, str):
            errors.append("Output path must be a non-empty string")

        if experiment.export_dir is not None and (not experiment.export_dir
                                                  or not isinstance(experiment.export_dir, str)):
            errors.append("Export directory must be a non-empty string when set")

        return errors

    @classmethod
    def _validate_mesh(cls, mesh) -> List[str]:
        """Validate mesh configuration."""
        errors = []

        if not _is_int(mesh.initial_refinements) or mesh.initial_refinements < 0:
            errors.append("Initial refinements must be a non-negative integer")

        if not (_is_number(mesh.grading_c1) and _is_number(mesh.grading_c2)) \
                or not 0.0 < mesh.grading_c1 <= mesh.grading_c2:
            errors.append("Grading constants must satisfy 0 < c1 <= c2")

        if not _is_number(mesh.h0) or mesh.h0 <= 0.0:
            errors.append("Initial mesh parameter h0 must be positive")

        if not _is_int(mesh.max_sweeps) or mesh.max_sweeps < 1:
            errors.append("Max sweeps must be a positive integer")

        if not _is_number(mesh.corner_floor) or mesh.corner_floor < 0.0:
            errors.append("Corner floor must be non-negative")

        return errors

    @classmethod
    def _validate_quadrature(cls, quadrature) -> List[str]:
        """Validate quadrature configuration."""
        errors = []

        for name in ("volume_depth", "corner_points", "boundary_gauss_points", "boundary_levels"):
            value = getattr(quadrature, name)
            if not _is_int(value) or value < 1:
                errors.append(f"Quadrature {name} must be a positive integer")

        if not _is_int(quadrature.near_levels) or quadrature.near_levels < 0:
            errors.append("Quadrature near_levels must be a non-negative integer")

        if not _is_number(quadrature.near_factor) or quadrature.near_factor < 0.0:
            errors.append("Quadrature near_factor must be non-negative")

        if not _is_number(quadrature.boundary_ratio) or not 0.0 < quadrature.boundary_ratio < 1.0:
            errors.append("Boundary splitting ratio must lie in (0, 1)")

        if not _is_number(quadrature.pairing_radius) or quadrature.pairing_radius <= 0.0:
            errors.append("Pairing radius must be positive")

        if quadrature.pairing_mu is not None:
            if not _is_number(quadrature.pairing_mu) or not 0.0 < quadrature.pairing_mu <= 1.0:
                errors.append("Pairing grading must lie in (0, 1]")

        if not _is_number(quadrature.pairing_h_factor) or quadrature.pairing_h_factor <= 0.0:
            errors.append("Pairing h factor must be positive")

        if not _is_number(quadrature.error_check_tolerance) or quadrature.error_check_tolerance <= 0.0:
            errors.append("Error check tolerance must be positive")

        if not _is_number(quadrature.singular_check_tolerance) or quadrature.singular_check_tolerance <= 0.0:
            errors.append("Singular check tolerance must be positive")

        return errors

    @classmethod
    def _validate_solver(cls, solver) -> List[str]:
        """Validate solver configuration."""
        errors = []

        if not _is_number(solver.tol) or solver.tol <= 0.0:
            errors.append("Solver tolerance must be positive")

        if not _is_int(solver.maxit_factor) or solver.maxit_factor < 1:
            errors.append("Solver maxit factor must be a positive integer")

        return errors

    @classmethod
    def _validate_logging(cls, logging_config) -> List[str]:
        """Validate logging configuration."""
        errors = []

        if logging_config.level not in cls.VALID_LOG_LEVELS:
            errors.append(f"Logging level must be one of: {cls.VALID_LOG_LEVELS}")

        if not logging_config.format or not isinstance(logging_config.format, str):
            errors.append("Logging format must be a non-empty string")

        return errors
