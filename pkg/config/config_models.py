"""
Configuration data models for DSCM FEM.

This module defines the data structures used for configuration management,
including default values for experiments, meshing, quadrature, the linear
solver and logging.
"""

from dataclasses import dataclass, field, fields
from typing import Optional, Dict, Any


@dataclass
class ExperimentConfig:
    """Which problem to solve and how."""
    omega_degrees: float = 270.0
    method: str = "standard"  # "standard", "graded" or "dscm"
    mu: float = 1.0
    levels: int = 6
    regularization: str = "l2proj"  # "l2proj" or "carstensen"
    datum_exponent: float = 0.4999
    problem: str = "singular_datum"  # "singular_datum" or "smooth_sine"
    output_path: str = "results/report.csv"
    export_dir: Optional[str] = None  # per-level mesh, matrices and solution files


@dataclass
class MeshConfig:
    """Mesh ladder and grading constants."""
    initial_refinements: int = 3
    grading_c1: float = 0.25
    grading_c2: float = 4.0
    h0: float = 0.25
    max_sweeps: int = 200
    corner_floor: float = 0.0


@dataclass
class QuadratureConfig:
    """Quadrature depths for singular integrands."""
    volume_depth: int = 16
    corner_points: int = 6
    near_levels: int = 2
    near_factor: float = 2.0
    boundary_gauss_points: int = 8
    boundary_levels: int = 12
    boundary_ratio: float = 0.25
    pairing_radius: float = 0.1
    pairing_mu: Optional[float] = None  # None: 2*pi/omega - 1
    pairing_h_factor: float = 0.25
    error_check_tolerance: float = 1e-5
    singular_check_tolerance: float = 1e-6


@dataclass
class SolverConfig:
    """Conjugate gradient settings."""
    tol: float = 1e-10
    maxit_factor: int = 10


@dataclass
class LoggingConfig:
    """Logging configuration."""
    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    use_structured_format: bool = False
    log_file_path: Optional[str] = None
    max_file_size: int = 10 * 1024 * 1024  # 10MB
    backup_count: int = 5
    use_colors: bool = True


SECTION_TYPES = {
    'experiment': ExperimentConfig,
    'mesh': MeshConfig,
    'quadrature': QuadratureConfig,
    'solver': SolverConfig,
    'logging': LoggingConfig,
}


def _coerce(current_value, value):
    # YAML 1.1 reads "1e-10" as a string; float fields accept it anyway
    if isinstance(current_value, float) and not isinstance(value, bool) \
            and isinstance(value, (int, str)):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def _section_from_dict(section_type, data: Dict[str, Any], current):
    """Build a section dataclass, keeping current values for missing keys."""
    known = {f.name for f in fields(section_type)}
    values = {name: getattr(current, name) for name in known}
    for key, value in data.items():
        if key in known:
            values[key] = _coerce(values[key], value)
    return section_type(**values)


@dataclass
class Config:
    """Main configuration class containing all configuration sections."""
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    mesh: MeshConfig = field(default_factory=MeshConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    @classmethod
    def get_default(cls) -> 'Config':
        """Get default configuration."""
        return cls()

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to dictionary."""
        def _dataclass_to_dict(obj):
            if hasattr(obj, '__dataclass_fields__'):
                return {
                    field_name: _dataclass_to_dict(getattr(obj, field_name))
                    for field_name in obj.__dataclass_fields__
                }
            return obj

        return _dataclass_to_dict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Config':
        """Create configuration from dictionary."""
        config = cls()

        for section_name, section_type in SECTION_TYPES.items():
            section_data = data.get(section_name)
            if isinstance(section_data, dict):
                setattr(config, section_name,
                        _section_from_dict(section_type, section_data, getattr(config, section_name)))

        return config
