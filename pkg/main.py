"""
DSCM FEM - Main Entry Point

Command line interface for the finite element library:

    solve   run one convergence study and write its CSV report
    mesh    build a (graded) mesh of the pacman domain and export it
    tables  run the preset matrix of convergence studies

Exit code 0 on success; on any error a single diagnostic line is written
to stderr and the exit code is 1.
"""

import sys
import math
import logging
import argparse
from typing import List, Optional
from pathlib import Path

from config import ConfigManager, Config, ConfigValidator
from models.mesh_models import GradingParams
from services.error_handler import ErrorHandler
from services.logging_service import configure_logging, get_logger, get_logging_service
from services.mesh_service import build_initial_mesh, export_mesh, refine_to_graded, uniform_refine
from services.study_service import PRESETS, graded_h, run_experiment, run_tables


def setup_logging_from_config(config: Config) -> logging.Logger:
    """
    从配置文件配置日志系统

    Args:
        config: 配置对象

    Returns:
        logging.Logger: 配置好的日志记录器
    """
    configure_logging(
        level=config.logging.level,
        use_structured_format=config.logging.use_structured_format,
        log_file_path=config.logging.log_file_path,
        max_file_size=config.logging.max_file_size,
        backup_count=config.logging.backup_count,
        use_colors=config.logging.use_colors
    )
    return get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    """
    构建命令行解析器

    Returns:
        argparse.ArgumentParser: 包含 solve / mesh / tables 子命令的解析器
    """
    parser = argparse.ArgumentParser(
        prog="dscm-fem",
        description="P1 finite elements for Poisson problems with L2 Dirichlet data on the pacman domain"
    )
    # 公共选项：写在子命令之后
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (overrides the configuration)"
    )
    common.add_argument("--config", type=Path, help="Configuration file (YAML or key = value)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    solve = subparsers.add_parser("solve", parents=[common], help="Run one convergence study")
    solve.add_argument("--omega", type=float, help="Interior angle in degrees")
    solve.add_argument("--method", choices=["standard", "graded", "dscm"])
    solve.add_argument("--mu", type=float, help="Grading parameter for the graded method")
    solve.add_argument("--levels", type=int, help="Number of refinement levels")
    solve.add_argument("--regularization", choices=["l2proj", "carstensen"])
    solve.add_argument("--datum-exponent", type=float, help="Exponent a of the datum r^-a sin(-a theta)")
    solve.add_argument("--problem", choices=["singular_datum", "smooth_sine"])
    solve.add_argument("--out", type=Path, help="CSV report path")
    solve.add_argument("--export-dir", type=Path,
                       help="Write mesh, stiffness/mass matrices and DSCM solution of every level here")

    mesh = subparsers.add_parser("mesh", parents=[common], help="Build and export a mesh")
    mesh.add_argument("--omega", type=float, required=True, help="Interior angle in degrees")
    mesh.add_argument("--mu", type=float, help="Grading parameter (quasi-uniform when omitted)")
    mesh.add_argument("--levels", type=int, required=True, help="Refinement level of the ladder")
    mesh.add_argument("--out", type=Path, required=True, help="Mesh file path")

    tables = subparsers.add_parser("tables", parents=[common], help="Run a preset matrix of studies")
    tables.add_argument("--preset", choices=sorted(PRESETS), default="paper")
    tables.add_argument("--out-dir", type=Path, default=Path("results"), help="Output directory")

    return parser


def load_config(config_path: Optional[Path] = None, args: argparse.Namespace = None) -> Config:
    """
    加载配置文件并应用命令行参数覆盖（命令行参数优先）

    Args:
        config_path: 配置文件路径
        args: 命令行参数

    Returns:
        Config: 配置对象
    """
    config_manager = ConfigManager(str(config_path) if config_path else None)
    config = config_manager.load_config(validate=False)

    if args:
        experiment = config.experiment
        overrides = {
            'omega_degrees': getattr(args, 'omega', None),
            'method': getattr(args, 'method', None),
            'mu': getattr(args, 'mu', None),
            'levels': getattr(args, 'levels', None),
            'regularization': getattr(args, 'regularization', None),
            'datum_exponent': getattr(args, 'datum_exponent', None),
            'problem': getattr(args, 'problem', None),
        }
        for name, value in overrides.items():
            if value is not None:
                setattr(experiment, name, value)
        if getattr(args, 'out', None) is not None and args.command == "solve":
            experiment.output_path = str(args.out)
        if getattr(args, 'export_dir', None) is not None:
            experiment.export_dir = str(args.export_dir)
        if args.log_level:
            config.logging.level = args.log_level

    return config


def command_solve(config: Config, args: argparse.Namespace) -> int:
    """运行单个收敛性实验，并将结果表输出到标准输出"""
    ConfigValidator.validate(config)
    report = run_experiment(config)
    print(report.to_frame().to_csv(index=False, na_rep=''), end='')
    return 0


def command_mesh(config: Config, args: argparse.Namespace) -> int:
    """构建网格并导出为文本格式"""
    if args.levels < 1:
        raise ValueError("Levels must be at least 1")
    mesh = build_initial_mesh(math.radians(args.omega))
    if args.mu is not None:
        params = GradingParams(
            mu=args.mu, h=graded_h(config.mesh.h0, args.mu, args.levels - 1),
            c1=config.mesh.grading_c1, c2=config.mesh.grading_c2,
            corner_floor=config.mesh.corner_floor
        )
        mesh = refine_to_graded(mesh, params, config.mesh.max_sweeps)
    else:
        mesh = uniform_refine(mesh, config.mesh.initial_refinements + 2 * (args.levels - 1))
    export_mesh(mesh, args.out)
    print(f"vertices {mesh.n_vertices} triangles {mesh.n_triangles} written to {args.out}")
    return 0


def command_tables(config: Config, args: argparse.Namespace) -> int:
    """运行预设的实验矩阵"""
    ConfigValidator.validate(config)
    reports = run_tables(args.preset, args.out_dir, config)
    for report in reports:
        print(f"{report.name}: unknowns {report.unknowns[-1]} eoc {report.final_eoc}")
    return 0


COMMANDS = {
    'solve': command_solve,
    'mesh': command_mesh,
    'tables': command_tables,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    主函数 - 命令行入口点

    解析命令行参数，加载配置，执行子命令。任何错误都会被转换为一行诊断信息，
    并以非零退出码结束。
    """
    error_handler = ErrorHandler()
    try:
        args = build_parser().parse_args(argv)
        config = load_config(args.config, args)
        logger = setup_logging_from_config(config)
        logger.debug("Configuration loaded", extra={'extra_data': {'command': args.command}})
        return COMMANDS[args.command](config, args)
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130
    except Exception as e:
        diagnostic = error_handler.handle_exception(e, context="dscm-fem")
        print(diagnostic.to_line(), file=sys.stderr)
        return 1
    finally:
        get_logging_service().shutdown()


if __name__ == "__main__":
    sys.exit(main())
