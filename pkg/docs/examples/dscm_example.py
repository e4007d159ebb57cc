#!/usr/bin/env python3
"""
DSCM FEM API 示例

Solves the singular-datum problem on the 270° pacman domain with the
standard method and with DSCM on three uniform meshes and prints both
convergence tables.

    python docs/examples/dscm_example.py
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2]))

from models.fem_models import SingularExponent  # noqa: E402
from services.logging_service import configure_logging  # noqa: E402
from services.mesh_service import build_initial_mesh, uniform_refine  # noqa: E402
from services.trace_service import l2_project_trace  # noqa: E402
from services.fem_service import solve_poisson_dirichlet  # noqa: E402
from services.dscm_service import dscm_solve  # noqa: E402
from services.study_service import singular_datum_problem, l2_error, eoc  # noqa: E402


def main():
    configure_logging(level="WARNING")

    omega = math.radians(270.0)
    s = SingularExponent(omega)
    problem = singular_datum_problem(omega)
    beta = 1.0 - 2.0 * max(problem.radial_exponent, s.lam)

    mesh = uniform_refine(build_initial_mesh(omega), 3)
    unknowns, standard, dscm = [], [], []
    for level in range(3):
        if level:
            mesh = uniform_refine(mesh, 2)
        trace = l2_project_trace(problem.datum, mesh)
        y_h = solve_poisson_dirichlet(mesh, None, trace)
        z_h = dscm_solve(mesh, problem.datum, None, s)

        unknowns.append(mesh.n_vertices)
        standard.append(l2_error(y_h, problem.exact, mesh, beta=beta))
        dscm.append(l2_error(z_h, problem.exact, mesh, beta=beta))
        print(f"level {level}: N={mesh.n_vertices} delta_h={z_h.delta:.4f}")

    for name, errors in (("standard", standard), ("dscm", dscm)):
        print(f"\n{name}")
        print("unknowns,error,eoc")
        for n, e, rate in zip(unknowns, errors, eoc(errors, unknowns)):
            print(f"{n},{e:.6g},{'' if rate is None else f'{rate:.3f}'}")


if __name__ == "__main__":
    main()
