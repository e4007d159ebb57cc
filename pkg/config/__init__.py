"""
Configuration management module for DSCM FEM.

This module provides configuration loading, validation, and management
functionality for the finite element experiments.
"""

from .config_manager import ConfigManager, Config, parse_key_value_text
from .config_validator import ConfigValidator, ConfigValidationError

__all__ = ['ConfigManager', 'Config', 'ConfigValidator', 'ConfigValidationError', 'parse_key_value_text']
