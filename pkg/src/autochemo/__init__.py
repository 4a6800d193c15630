"""Characteristic Galerkin finite elements for growth-mediated
autochemotactic pattern formation on periodic rectangles.

The model couples bacterial density rho, a self-secreted chemical c,
and a polarization field p.  Density transport is advanced along
approximate characteristics with a Jacobian-determinant weight that
preserves the discrete mass budget; each time step then reduces to
three decoupled symmetric positive definite solves (rho, c, p).
"""

from .experiments import (CONVERGENCE_PARAMS, PRESETS, ConvergenceResult,
                          ManufacturedSolution, PatternMetrics, ScenarioSpec,
                          get_preset, init_scenario, manufactured_solution,
                          nondimensionalize, pattern_metrics,
                          run_convergence_study, run_scenario)
from .fem import MIDPOINT_RULE, SIX_POINT_RULE, P1Assembler, QuadratureRule
from .linalg import SolveReport, SolverError, cg_solve
from .mesh import PeriodicMesh, build_mesh, locate_point, locate_points, wrap_point
from .stepper import (ForcingTerms, ModelParams, State, StepDiagnostics,
                      Stepper, mass_balance_residual)

__version__ = "0.1.0"

__all__ = [
    "CONVERGENCE_PARAMS", "PRESETS", "ConvergenceResult",
    "ManufacturedSolution", "PatternMetrics", "ScenarioSpec",
    "get_preset", "init_scenario", "manufactured_solution",
    "nondimensionalize", "pattern_metrics", "run_convergence_study",
    "run_scenario", "MIDPOINT_RULE", "SIX_POINT_RULE", "P1Assembler",
    "QuadratureRule", "SolveReport", "SolverError", "cg_solve",
    "PeriodicMesh", "build_mesh", "locate_point", "locate_points",
    "wrap_point", "ForcingTerms", "ModelParams", "State",
    "StepDiagnostics", "Stepper", "mass_balance_residual", "__version__",
]
