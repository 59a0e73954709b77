"""Plane-strain Q1 finite elements with ELA, GPLA and LET material treatment."""

from .assembly import Assembler, element_force_and_stiffness
from .bc import Constraints, Dirichlet, PeriodicPair, affine_dirichlet, field_dirichlet, periodic, uniaxial
from .mesh import Mesh, build_mesh, shape_gradients, shape_values
from .points import Method, PointSet, PointState
from .solver import Problem, SolutionState, load_path, newton_solve, run_load_steps

__all__ = [
    "Assembler", "Constraints", "Dirichlet", "Mesh", "Method", "PeriodicPair", "PointSet",
    "PointState", "Problem", "SolutionState", "affine_dirichlet", "build_mesh",
    "element_force_and_stiffness", "field_dirichlet", "load_path", "newton_solve", "periodic",
    "run_load_steps", "shape_gradients", "shape_values", "uniaxial",
]
