"""Colocated finite volumes for 2D incompressible Navier-Stokes on acute triangular meshes."""

from .mesh import (Mesh, MeshError, MeshGeometryError, MeshParseError, MeshTopologyError,
                   QualityReport, build_equilateral_mesh, load_mesh, read_triangle_files,
                   refine_uniform, validate)
from .operators import (SparseOperator, assemble_conv, assemble_div, assemble_grad,
                        assemble_lap_h, assemble_lap_tilde, conv_upwind, div_h, grad_h, lap_h,
                        lap_tilde_h, trilinear_b)
from .fields import (interpolate_p0, mean_zero, norm_dual_h, norm_h, norm_l2, project_p0,
                     project_p1nc_from_p0, project_rt0, reconstruct_rt0, tilde_grad_p1nc)
from .solver import SolveReport, SolverConfig, solve_krylov, solve_spd
from .scheme import SchemeConfig, SchemeState, StepDiagnostics, run

__all__ = [
    "Mesh", "MeshError", "MeshGeometryError", "MeshParseError", "MeshTopologyError",
    "QualityReport", "build_equilateral_mesh", "load_mesh", "read_triangle_files",
    "refine_uniform", "validate",
    "SparseOperator", "assemble_conv", "assemble_div", "assemble_grad", "assemble_lap_h",
    "assemble_lap_tilde", "conv_upwind", "div_h", "grad_h", "lap_h", "lap_tilde_h",
    "trilinear_b",
    "interpolate_p0", "mean_zero", "norm_dual_h", "norm_h", "norm_l2", "project_p0",
    "project_p1nc_from_p0", "project_rt0", "reconstruct_rt0", "tilde_grad_p1nc",
    "SolveReport", "SolverConfig", "solve_krylov", "solve_spd",
    "SchemeConfig", "SchemeState", "StepDiagnostics", "run",
]

__version__ = "0.1.0"
