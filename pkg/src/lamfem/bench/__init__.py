"""Configured benchmarks, error norms, result files and convergence studies."""

from .benchmarks import PlanarSolution, build_problem, planar_solution
from .config import SCHEMA, RunConfig, validate
from .norms import NodalField, energy_error, interpolate, l2_error, total_energy
from .run import Reference, RunResult, convergence_study, laminate_path, reference_for, simulate, solve

__all__ = [
    "NodalField", "PlanarSolution", "interpolate", "Reference", "RunConfig", "RunResult", "SCHEMA", "build_problem",
    "convergence_study", "energy_error", "l2_error", "laminate_path", "planar_solution",
    "reference_for", "simulate", "solve", "total_energy", "validate",
]
