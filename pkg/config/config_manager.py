"""
Configuration manager for DSCM FEM.

This module provides the main configuration management functionality,
including loading from YAML or key = value files, environment variables,
and validation.
"""

import os
import yaml
import logging
from typing import Optional, Dict, Any, Tuple

from .config_models import Config
from .config_validator import ConfigValidator, ConfigValidationError


logger = logging.getLogger(__name__)


TRUE_VALUES = ('true', '1', 'yes', 'on')

# environment suffix -> (section, field, type)
ENV_OVERRIDES: Dict[str, Tuple[str, str, type]] = {
    'OMEGA': ('experiment', 'omega_degrees', float),
    'METHOD': ('experiment', 'method', str),
    'MU': ('experiment', 'mu', float),
    'LEVELS': ('experiment', 'levels', int),
    'REGULARIZATION': ('experiment', 'regularization', str),
    'DATUM_EXPONENT': ('experiment', 'datum_exponent', float),
    'PROBLEM': ('experiment', 'problem', str),
    'OUTPUT': ('experiment', 'output_path', str),
    'EXPORT_DIR': ('experiment', 'export_dir', str),
    'MESH_C1': ('mesh', 'grading_c1', float),
    'MESH_C2': ('mesh', 'grading_c2', float),
    'MESH_H0': ('mesh', 'h0', float),
    'MESH_MAX_SWEEPS': ('mesh', 'max_sweeps', int),
    'MESH_CORNER_FLOOR': ('mesh', 'corner_floor', float),
    'QUADRATURE_DEPTH': ('quadrature', 'volume_depth', int),
    'PAIRING_RADIUS': ('quadrature', 'pairing_radius', float),
    'PAIRING_MU': ('quadrature', 'pairing_mu', float),
    'SOLVER_TOL': ('solver', 'tol', float),
    'SOLVER_MAXIT_FACTOR': ('solver', 'maxit_factor', int),
    'LOG_LEVEL': ('logging', 'level', str),
    'LOG_STRUCTURED': ('logging', 'use_structured_format', bool),
    'LOG_FILE': ('logging', 'log_file_path', str),
    'LOG_COLORS': ('logging', 'use_colors', bool),
}


def parse_scalar(text: str) -> Any:
    """Parse one value of the key = value format with YAML scalar rules."""
    value = yaml.safe_load(text) if text.strip() else None
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def parse_key_value_text(text: str) -> Dict[str, Any]:
    """
    Parse the key = value configuration format into the nested dictionary
    accepted by Config.from_dict.

    Dotted keys address a section (``mesh.grading_c1 = 0.3``); undotted
    keys address ``experiment``.

    Raises:
        ValueError: on a line without '='
    """
    data: Dict[str, Dict[str, Any]] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ValueError(f"Line {number}: expected 'key = value', got {raw_line!r}")
        key, value = (part.strip() for part in line.split('=', 1))
        section, _, name = key.rpartition('.')
        data.setdefault(section or 'experiment', {})[name] = parse_scalar(value)
    return data


class ConfigManager:
    """
    Configuration manager for loading and managing experiment configuration.

    This class handles loading configuration from YAML or key = value files,
    environment variables, and provides validation and default configuration
    management.
    """

    DEFAULT_CONFIG_FILE = "config.yaml"
    ENV_PREFIX = "DSCM_FEM_"

    def __init__(self, config_file: Optional[str] = None):
        """
        Initialize configuration manager.

        Args:
            config_file: Path to configuration file (optional)
        """
        self.config_file = config_file or self.DEFAULT_CONFIG_FILE
        self._config: Optional[Config] = None

    def load_config(self, validate: bool = True) -> Config:
        """
        Load configuration from file and environment variables.

        Args:
            validate: Whether to validate the configuration

        Returns:
            Loaded and validated configuration

        Raises:
            ConfigValidationError: If validation fails
            yaml.YAMLError: If YAML parsing fails
            ValueError: If a key = value line is malformed
        """
        logger.info(f"Loading configuration from {self.config_file}")

        config = Config.get_default()

        if os.path.exists(self.config_file):
            try:
                file_data = self._read_file(self.config_file)
                if file_data:
                    config = Config.from_dict(file_data)
                    logger.info("Configuration loaded from file successfully")
            except yaml.YAMLError as e:
                logger.error(f"Failed to parse YAML configuration: {e}")
                raise
            except Exception as e:
                logger.error(f"Failed to load configuration file: {e}")
                raise
        else:
            logger.warning(f"Configuration file {self.config_file} not found, using defaults")

        config = self._apply_env_overrides(config)

        if validate:
            try:
                ConfigValidator.validate(config)
                logger.info("Configuration validation passed")
            except ConfigValidationError as e:
                logger.error(f"Configuration validation failed: {e}")
                for error in e.errors:
                    logger.error(f"  - {error}")
                raise

        self._config = config
        return config

    @staticmethod
    def _read_file(path: str) -> Dict[str, Any]:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
        if path.endswith(('.yaml', '.yml')):
            return yaml.safe_load(text) or {}
        return parse_key_value_text(text)

    def get_config(self) -> Config:
        """
        Get current configuration.

        Raises:
            RuntimeError: If configuration has not been loaded
        """
        if self._config is None:
            raise RuntimeError("Configuration has not been loaded. Call load_config() first.")
        return self._config

    def save_config(self, config: Config, file_path: Optional[str] = None) -> None:
        """
        Save configuration to a YAML file.

        Args:
            config: Configuration object to save
            file_path: Path to save configuration (optional, uses current config file)
        """
        save_path = file_path or self.config_file

        try:
            ConfigValidator.validate(config)

            config_dict = config.to_dict()

            os.makedirs(os.path.dirname(save_path) if os.path.dirname(save_path) else '.', exist_ok=True)

            with open(save_path, 'w', encoding='utf-8') as f:
                yaml.dump(config_dict, f, default_flow_style=False, indent=2)

            logger.info(f"Configuration saved to {save_path}")

        except Exception as e:
            logger.error(f"Failed to save configuration: {e}")
            raise

    def _apply_env_overrides(self, config: Config) -> Config:
        """
        Apply environment variable overrides to configuration.

        Args:
            config: Base configuration to override

        Returns:
            Configuration with environment overrides applied
        """
        logger.debug("Applying environment variable overrides")

        for suffix, (section, name, kind) in ENV_OVERRIDES.items():
            env_val = os.getenv(f"{self.ENV_PREFIX}{suffix}")
            if not env_val:
                continue
            try:
                if kind is bool:
                    value = env_val.lower() in TRUE_VALUES
                elif kind is str:
                    value = env_val.upper() if name == 'level' else env_val
                else:
                    value = kind(env_val)
            except ValueError:
                logger.warning(f"Invalid {kind.__name__} value in environment {self.ENV_PREFIX}{suffix}: {env_val}")
                continue
            setattr(getattr(config, section), name, value)
            logger.debug(f"Override {section}.{name} = {value}")

        return config

    @classmethod
    def create_default_config_file(cls, file_path: str = None) -> None:
        """
        Create a default configuration file.

        Args:
            file_path: Path where to create the config file
        """
        file_path = file_path or cls.DEFAULT_CONFIG_FILE

        if os.path.exists(file_path):
            logger.warning(f"Configuration file {file_path} already exists")
            return

        default_config = Config.get_default()
        manager = cls(file_path)
        manager.save_config(default_config, file_path)
        logger.info(f"Default configuration file created at {file_path}")

    def get_config_summary(self) -> Dict[str, Any]:
        """
        Get a summary of current configuration for logging/debugging.
        """
        if self._config is None:
            return {"status": "not_loaded"}

        return {
            "status": "loaded",
            "omega_degrees": self._config.experiment.omega_degrees,
            "method": self._config.experiment.method,
            "mu": self._config.experiment.mu,
            "levels": self._config.experiment.levels,
            "config_file": self.config_file
        }
