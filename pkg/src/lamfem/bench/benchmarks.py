"""Problem construction from run configurations and analytic references."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import tensor as T
from ..errors import ConfigError
from ..fem import PointSet, Problem, affine_dirichlet, build_mesh, field_dirichlet, periodic, uniaxial
from ..geometry import ElementBox, Plane, clipped_area_fraction
from ..laminate import LaminateConfig, solve_c
from ..materials import LinearElastic
from .config import grad3


@dataclass(frozen=True, eq=False)
class PlanarSolution:
    """Exact piecewise-affine field for a planar interface.

    Phase 1 carries ``F₁ = I + H``, phase 2 ``F₂ = F₁ + c⊗N`` with ``c``
    chosen so that the tractions balance; the displacement is
    ``u = H X + max((X - p)·N, 0) c``.
    """

    H: np.ndarray
    plane: Plane
    c: np.ndarray
    W1: float
    W2: float

    @classmethod
    def solve(cls, H, plane, phase1, phase2):
        H = np.asarray(H, dtype=float)
        N = np.append(plane.normal, 0.0)
        if isinstance(phase1, LinearElastic) and isinstance(phase2, LinearElastic):
            c = _linear_jump(H, N, phase1, phase2)
        else:
            cfg = LaminateConfig(np.zeros(1), N[None], phase1, phase2)
            c = solve_c((np.eye(3) + H)[None], cfg).c[0]
        F1 = np.eye(3) + H
        F2 = F1 + np.outer(c, N)
        W1 = float(phase1.energy(F1, phase1.initial_history(1)[0]))
        W2 = float(phase2.energy(F2, phase2.initial_history(1)[0]))
        return cls(H, plane, c, W1, W2)

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        s = np.maximum(self.plane(X), 0.0)
        return X @ self.H[:2, :2].T + s[..., None] * self.c[:2]

    def energy(self, box):
        """``∫ W dV`` over the rectangle ``box = ((x0, y0), (x1, y1))``."""
        (x0, y0), (x1, y1) = box
        area = (x1 - x0) * (y1 - y0)
        eta = clipped_area_fraction(self.plane, ElementBox(x0, y0, x1 - x0, y1 - y0))
        return area * ((1.0 - eta) * self.W1 + eta * self.W2)


def _linear_jump(H, N, m1, m2):
    # (N·C₂·N) c = -[σ₂(ε₁) - σ₁(ε₁)] N, with ε₁ the phase-1 strain
    eps1 = T.sym(H)
    acoustic = np.einsum("j,ijkl,l->ik", N, m2.moduli, N)
    rhs = -(m2.small_strain_stress(eps1) - m1.small_strain_stress(eps1)) @ N
    return np.linalg.solve(acoustic, rhs)


def _plane_of(levelset):
    if not isinstance(levelset, Plane):
        raise ConfigError("bc: 'planar_exact' requires a plane level set")
    return levelset


def planar_solution(cfg):
    """Analytic reference of a ``planar_exact`` configuration."""
    if cfg["bc"]["type"] != "planar_exact":
        raise ConfigError("reference: an analytic reference needs a 'planar_exact' boundary condition")
    m1, m2 = cfg.materials()
    return PlanarSolution.solve(cfg.macro_gradient(), _plane_of(cfg.levelset()), m1, m2)


def build_bcs(cfg, mesh):
    bc = cfg["bc"]
    amp = cfg["load"]["amplitude"]
    kind = bc["type"]
    if kind == "affine":
        return affine_dirichlet(mesh, amp * grad3(bc["grad"]))
    if kind == "periodic":
        return periodic(mesh, amp * grad3(bc["grad"]))
    if kind == "uniaxial":
        return uniaxial(mesh, amp * bc["strain"])
    return field_dirichlet(mesh, planar_solution(cfg))


def build_problem(cfg):
    """Mesh, material points and constraints for a validated configuration."""
    m = cfg["mesh"]
    mesh = build_mesh(m["nx"], m["ny"], cfg.box)
    m1, m2 = cfg.materials()
    points = PointSet.build(mesh, cfg.levelset(), cfg["method"], m1, m2, cfg["n_sub"])
    tol = cfg["tolerances"]
    return Problem(mesh, points, build_bcs(cfg, mesh), tol=tol["newton"], max_iter=tol["max_iter"],
                   max_cuts=tol["max_cuts"])
