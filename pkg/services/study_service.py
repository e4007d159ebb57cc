"""
Convergence studies.

Computes L²(Ω) discretization errors against the exact solution, the
experimental order of convergence with respect to h ~ N^{−1/2}, and runs
whole experiments (one CSV per run, plus a metadata file) and the preset
table matrix.
"""

import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml

from config.config_models import Config
from config.config_validator import ConfigValidator
from models.mesh_models import Mesh, GradingParams
from models.fem_models import NodalField, SingularExponent, DscmSolution
from models.experiment_models import ExperimentReport, ReportRow
from models.error_models import QuadratureAccuracyError
from .logging_service import get_logger, log_error, log_level_result
from .performance_monitor import get_performance_monitor, track_stage
from .mesh_service import build_initial_mesh, export_mesh, polar_of, refine_to_graded, uniform_refine
from .fem_service import (
    SourceFunction, assemble_mass, assemble_stiffness, export_matrix, solve_poisson_dirichlet
)
from .trace_service import regularize_trace
from .quadrature_rules import build_boundary_quadrature, build_volume_quadrature
from .singular_service import checked_singular_quadrature, eval_dual
from .dscm_service import complement_cauchy, dscm_solve, export_solution


logger = get_logger(__name__)

ScalarFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Problem:
    """Test problem with known exact solution y, Dirichlet datum u and source f."""
    name: str
    omega: float
    exact: ScalarFunction
    datum: ScalarFunction
    source: Optional[SourceFunction]
    radial_exponent: float = 0.0


def singular_datum_problem(omega: float, exponent: float = 0.4999) -> Problem:
    """y = u = r^{−a} sin(−aθ), f = 0: harmonic with an L²(Γ) but not H^{1/2} trace."""

    def exact(x1, x2):
        r, theta = polar_of(np.stack([x1, x2], axis=-1), omega)
        return r ** (-exponent) * np.sin(-exponent * theta)

    return Problem("singular_datum", omega, exact, exact, None, exponent)


def smooth_sine_problem() -> Problem:
    """y = sin(πx₁)sin(πx₂) on the unit square, f = 2π²y, u = 0."""

    def exact(x1, x2):
        return np.sin(np.pi * x1) * np.sin(np.pi * x2)

    def source(x1, x2):
        return 2.0 * np.pi ** 2 * exact(x1, x2)

    def datum(x1, x2):
        return np.zeros_like(np.asarray(x1, dtype=float))

    return Problem("smooth_sine", 0.5 * math.pi, exact, datum, source)


def make_problem(config: Config) -> Problem:
    experiment = config.experiment
    if experiment.problem == "smooth_sine":
        if experiment.omega_degrees != 90.0:
            logger.warning("smooth_sine is posed on the unit square; omega_degrees ignored",
                           extra={'extra_data': {'omega_degrees': experiment.omega_degrees}})
        return smooth_sine_problem()
    return singular_datum_problem(math.radians(experiment.omega_degrees), experiment.datum_exponent)


def l2_error(solution: Union[NodalField, DscmSolution], exact: ScalarFunction, mesh: Mesh,
             depth: int = 16, corner_points: int = 6, near_levels: int = 2,
             near_factor: float = 2.0, beta: float = 0.0,
             check_tolerance: Optional[float] = 1e-5) -> float:
    """
    ‖exact − solution‖_{L²(Ω)}; a DscmSolution contributes z̃_h + δ_h r^{−λ} sin λθ.

    The integral is repeated with twice the corner depth; a relative change
    above ``check_tolerance`` raises.

    Raises:
        QuadratureAccuracyError: if the depth-doubling check fails
    """
    if isinstance(solution, DscmSolution):
        values = solution.z_tilde.values
        s = SingularExponent(mesh.omega)
        delta = solution.delta
    else:
        values = solution.values
        s, delta = None, 0.0

    def integrate(d: int) -> float:
        quad = build_volume_quadrature(mesh, depth=d, corner_points=corner_points,
                                       near_levels=near_levels, near_factor=near_factor, beta=beta)
        diff = exact(quad.points[:, 0], quad.points[:, 1]) - quad.interpolate(values)
        if s is not None and delta != 0.0:
            diff = diff - delta * eval_dual(s, quad.points)
        return math.sqrt(max(quad.integrate(diff * diff), 0.0))

    with track_stage(__name__, "l2_error", extra_data={'depth': depth}) as info:
        error = integrate(depth)
        info['error'] = error
        if check_tolerance is not None:
            check = integrate(2 * depth)
            change = abs(check - error)
            info['depth_doubling_change'] = change
            # errors at rounding level are not checked relatively
            if change > check_tolerance * abs(check) and change > 1e-14:
                raise QuadratureAccuracyError(
                    "L2 error changes under depth doubling",
                    {'error': error, 'doubled': check, 'relative_change': change,
                     'tolerance': check_tolerance}
                )
    return error


def eoc(errors: Sequence[float], unknowns: Sequence[int]) -> List[Optional[float]]:
    """
    eoc_i = ln(e_{i−1}/e_i) / ln(√(N_i/N_{i−1})); None for the first entry.

    Raises:
        ValueError: on length mismatch, fewer than two entries or non-positive input
    """
    if len(errors) != len(unknowns):
        raise ValueError("errors and unknowns must have equal length")
    if len(errors) < 2:
        raise ValueError("at least two levels are needed for an eoc")
    if any(e <= 0 for e in errors) or any(n <= 0 for n in unknowns):
        raise ValueError("errors and unknowns must be positive")
    rates: List[Optional[float]] = [None]
    for i in range(1, len(errors)):
        rates.append(math.log(errors[i - 1] / errors[i])
                     / math.log(math.sqrt(unknowns[i] / unknowns[i - 1])))
    return rates


def run_name(omega_degrees: float, method: str, mu: Optional[float] = None) -> str:
    """``omega<deg>_<method>[_mu<μ>]``."""
    name = f"omega{omega_degrees:g}_{method}"
    if method == "graded" and mu is not None:
        name += f"_mu{mu:g}"
    return name


def graded_ratio(mu: float) -> float:
    """
    Per-level factor q of the graded schedule h_ℓ = h0·q^ℓ.

    The corner bound c2·h^{1/μ} then shrinks by 2^{−m/2} per level with m
    even, so every level adds the same whole number of bisection pairs at
    the origin and consecutive meshes keep the same shape near the corner.
    """
    m = 2 * max(1, round(1.0 / mu))
    return 2.0 ** (-mu * m / 2.0)


def graded_h(h0: float, mu: float, level: int) -> float:
    return h0 * graded_ratio(mu) ** level


def mesh_ladder(config: Config, omega: float) -> Iterator[Tuple[int, Mesh]]:
    """
    Uniform ladder (initial_refinements + 2ℓ bisection rounds) for standard
    and dscm; graded ladder with h_ℓ = graded_h(h0, μ, ℓ), each level refined
    from the initial mesh.
    """
    experiment, mesh_config = config.experiment, config.mesh
    initial = build_initial_mesh(omega)
    if experiment.method == "graded":
        for level in range(experiment.levels):
            params = GradingParams(
                mu=experiment.mu, h=graded_h(mesh_config.h0, experiment.mu, level),
                c1=mesh_config.grading_c1, c2=mesh_config.grading_c2,
                corner_floor=mesh_config.corner_floor
            )
            yield level, refine_to_graded(initial, params, mesh_config.max_sweeps)
    else:
        mesh = uniform_refine(initial, mesh_config.initial_refinements)
        for level in range(experiment.levels):
            if level:
                mesh = uniform_refine(mesh, 2)
            yield level, mesh


def _error_exponent(problem: Problem, method: str, s: SingularExponent) -> float:
    exponent = problem.radial_exponent
    if method == "dscm":
        exponent = max(exponent, s.lam)
    return 1.0 - 2.0 * exponent if exponent > 0.0 else 0.0


def solve_level(mesh: Mesh, problem: Problem,
                config: Config) -> Tuple[float, Dict[str, float], Union[NodalField, DscmSolution]]:
    """Solve one level with the configured method; returns (L² error, details, solution)."""
    experiment, quadrature, solver = config.experiment, config.quadrature, config.solver
    s = SingularExponent(mesh.omega)
    boundary_quad = build_boundary_quadrature(mesh, quadrature.boundary_gauss_points,
                                              quadrature.boundary_levels, quadrature.boundary_ratio)
    details: Dict[str, float] = {}

    if experiment.method == "dscm":
        volume_quad = checked_singular_quadrature(
            mesh, s, depth=quadrature.volume_depth, corner_points=quadrature.corner_points,
            near_levels=quadrature.near_levels, near_factor=quadrature.near_factor,
            check_tolerance=quadrature.singular_check_tolerance
        )
        solution: Union[NodalField, DscmSolution] = dscm_solve(
            mesh, problem.datum, problem.source, s, solver.tol, experiment.regularization,
            volume_quad=volume_quad, boundary_quad=boundary_quad,
            pairing_radius=quadrature.pairing_radius, pairing_mu=quadrature.pairing_mu,
            pairing_h=quadrature.pairing_h_factor * float(mesh.boundary_lengths.max()),
            maxit_factor=solver.maxit_factor
        )
        details.update({k: float(v) for k, v in solution.coefficients().items()})
    else:
        trace = regularize_trace(problem.datum, mesh, experiment.regularization, boundary_quad)
        solution = solve_poisson_dirichlet(mesh, problem.source, trace, solver.tol,
                                           maxit_factor=solver.maxit_factor)

    error = l2_error(solution, problem.exact, mesh, depth=quadrature.volume_depth,
                     corner_points=quadrature.corner_points, near_levels=quadrature.near_levels,
                     near_factor=quadrature.near_factor,
                     beta=_error_exponent(problem, experiment.method, s),
                     check_tolerance=quadrature.error_check_tolerance)
    return error, details, solution


def _plain(value):
    """numpy scalars and containers to plain Python for YAML."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, 'item'):
        return value.item()
    return value


def write_report(report: ExperimentReport, csv_path: Union[str, Path]) -> Path:
    """Write ``unknowns,error,eoc`` and ``<name>.meta.yaml`` next to it."""
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    report.to_frame().to_csv(csv_path, index=False, na_rep='')
    meta_path = csv_path.with_suffix('.meta.yaml')
    meta = dict(report.metadata)
    meta['levels'] = [
        {'level': row.level, 'unknowns': row.unknowns, 'error': row.error, 'eoc': row.eoc, **row.details}
        for row in report.rows
    ]
    with open(meta_path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(_plain(meta), f, default_flow_style=False, sort_keys=False, allow_unicode=True)
    return meta_path


def export_level(directory: Union[str, Path], level: int, mesh: Mesh,
                 solution: Union[NodalField, DscmSolution]) -> None:
    """
    Write ``level<ℓ>.mesh``, ``level<ℓ>_stiffness.mtx``, ``level<ℓ>_mass.mtx``
    and, for DSCM, ``level<ℓ>.dscm``.
    """
    directory = Path(directory)
    export_mesh(mesh, directory / f"level{level}.mesh")
    export_matrix(assemble_stiffness(mesh), directory / f"level{level}_stiffness.mtx",
                  comment=f"stiffness level {level}")
    export_matrix(assemble_mass(mesh), directory / f"level{level}_mass.mtx",
                  comment=f"mass level {level}")
    if isinstance(solution, DscmSolution):
        export_solution(solution, directory / f"level{level}.dscm")


def run_experiment(config: Config, name: Optional[str] = None) -> ExperimentReport:
    """
    Mesh ladder, solve, L² error and eoc per level; the CSV is rewritten
    after every level so a failure leaves the finished levels on disk.
    """
    ConfigValidator.validate(config)
    experiment = config.experiment
    problem = make_problem(config)
    name = name or run_name(experiment.omega_degrees, experiment.method,
                            experiment.mu if experiment.method == "graded" else None)
    output = Path(experiment.output_path)

    monitor = get_performance_monitor()
    monitor.reset_metrics()
    report = ExperimentReport(name=name, metadata={
        'run': name,
        'config': config.to_dict(),
        'lambda': math.pi / problem.omega,
        'status': 'running',
    })
    start = time.time()

    try:
        previous = None
        for level, mesh in mesh_ladder(config, problem.omega):
            level_start = time.time()
            error, details, solution = solve_level(mesh, problem, config)
            row = ReportRow(level=level, unknowns=mesh.n_vertices, error=error, details=details)
            if report.rows:
                row.eoc = eoc([report.rows[-1].error, error], [report.rows[-1].unknowns, row.unknowns])[1]
            complement = getattr(solution, 'complement', None)
            if complement is not None:
                if previous is not None:
                    details['ps_cauchy'], details['beta_cauchy'] = complement_cauchy(previous, complement)
                previous = complement
            if experiment.export_dir:
                export_level(experiment.export_dir, level, mesh, solution)
            details['triangles'] = mesh.n_triangles
            details['h_max'] = mesh.h_max
            details['rss_mb'] = monitor.sample_system({'run': name})['rss_mb']
            report.rows.append(row)

            duration_ms = (time.time() - level_start) * 1000
            details['duration_ms'] = duration_ms
            log_level_result(__name__, name, level, row.unknowns, error, row.eoc, duration_ms)
            write_report(report, output)
    except Exception as e:
        report.metadata.update({'status': 'failed', 'error': f"{type(e).__name__}: {e}"})
        log_error(__name__, e, context=f"Experiment {name} failed at level {len(report.rows)}")
        report.metadata['wall_time_s'] = time.time() - start
        write_report(report, output)
        raise

    report.metadata.update({
        'status': 'completed',
        'wall_time_s': time.time() - start,
        'stage_totals_ms': monitor.stage_totals_ms(),
        'peak_rss_mb': monitor.peak_rss_mb(),
    })
    write_report(report, output)
    return report


@dataclass(frozen=True)
class PresetRun:
    omega_degrees: float
    method: str
    mu: float = 1.0
    levels: int = 8
    corner_floor: float = 0.0
    max_sweeps: int = 200


PRESETS: Dict[str, List[PresetRun]] = {
    'paper': [
        PresetRun(270.0, 'standard'),
        PresetRun(270.0, 'dscm'),
        PresetRun(270.0, 'graded', 0.666),
        PresetRun(270.0, 'graded', 0.5),
        PresetRun(270.0, 'graded', 0.333),
        PresetRun(355.0, 'standard'),
        PresetRun(355.0, 'dscm'),
        PresetRun(355.0, 'graded', 0.5),
        PresetRun(355.0, 'graded', 0.3),
        PresetRun(355.0, 'graded', 0.014085, levels=6, corner_floor=1e-24, max_sweeps=5000),
    ],
    'quick': [
        PresetRun(270.0, 'standard', levels=4),
        PresetRun(270.0, 'dscm', levels=4),
        PresetRun(270.0, 'graded', 0.666, levels=4),
        PresetRun(270.0, 'graded', 0.5, levels=4),
        PresetRun(270.0, 'graded', 0.333, levels=4),
        PresetRun(355.0, 'standard', levels=4),
        PresetRun(355.0, 'dscm', levels=4),
        PresetRun(355.0, 'graded', 0.5, levels=4),
        PresetRun(355.0, 'graded', 0.3, levels=4),
        PresetRun(355.0, 'graded', 0.014085, levels=3, corner_floor=1e-24, max_sweeps=5000),
    ],
}


def preset_config(base: Config, run: PresetRun, output_dir: Union[str, Path]) -> Config:
    name = run_name(run.omega_degrees, run.method, run.mu if run.method == "graded" else None)
    return Config(
        experiment=replace(base.experiment, omega_degrees=run.omega_degrees, method=run.method,
                           mu=run.mu, levels=run.levels, problem="singular_datum",
                           output_path=str(Path(output_dir) / f"{name}.csv")),
        mesh=replace(base.mesh, corner_floor=max(base.mesh.corner_floor, run.corner_floor),
                     max_sweeps=max(base.mesh.max_sweeps, run.max_sweeps)),
        quadrature=base.quadrature,
        solver=base.solver,
        logging=base.logging,
    )


def run_tables(preset: str = "paper", output_dir: Union[str, Path] = "results",
               base: Optional[Config] = None) -> List[ExperimentReport]:
    """
    Run every experiment of a preset; writes one CSV per run and
    ``summary.csv`` with the finest-level eoc of each run.

    Raises:
        ValueError: for an unknown preset
    """
    if preset not in PRESETS:
        raise ValueError(f"Unknown preset '{preset}', expected one of {sorted(PRESETS)}")
    base = base or Config.get_default()
    output_dir = Path(output_dir)
    reports = []
    summary = []
    for run in PRESETS[preset]:
        config = preset_config(base, run, output_dir)
        report = run_experiment(config)
        reports.append(report)
        summary.append({
            'run': report.name,
            'omega_degrees': run.omega_degrees,
            'method': run.method,
            'mu': run.mu if run.method == "graded" else None,
            'finest_unknowns': report.unknowns[-1],
            'finest_error': report.errors[-1],
            'finest_eoc': report.final_eoc,
        })
        output_dir.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(summary).to_csv(output_dir / "summary.csv", index=False, na_rep='')
    logger.info(f"Preset {preset} finished", extra={'extra_data': {'runs': len(reports)}})
    return reports
