"""Global Newton iteration with load stepping and step cutting."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse.linalg as spla

from ..errors import GlobalDivergence, LamfemError
from .assembly import Assembler
from .bc import Constraints
from .points import PointSet, PointState

log = logging.getLogger(__name__)


@dataclass
class SolutionState:
    u: np.ndarray
    points: PointState
    load: float
    f_int: np.ndarray
    P: np.ndarray
    W: np.ndarray
    gamma: np.ndarray
    iterations: int = 0
    residuals: list = field(default_factory=list)
    substeps: int = 1


class Problem:
    """Mesh, material points and constraints of one boundary-value problem."""

    def __init__(self, mesh, points: PointSet, bcs, tol=1e-10, max_iter=25, max_cuts=8, chunk=16384):
        self.mesh = mesh
        self.points = points
        self.assembler = Assembler(mesh, points, chunk=chunk)
        self.constraints = Constraints(mesh, bcs)
        self.tol = tol
        self.max_iter = max_iter
        self.max_cuts = max_cuts

    @property
    def tangent_scale(self):
        return self.assembler.tangent_scale

    @tangent_scale.setter
    def tangent_scale(self, value):
        # negative-control hook: a deliberately inconsistent tangent
        self.assembler.tangent_scale = value

    def initial_state(self):
        pts = self.points.initial_state()
        u = np.zeros(self.mesh.n_dofs)
        asm = self.assembler.assemble(u, pts, tangent=False)
        return SolutionState(u, pts, 0.0, asm.f_int, asm.P, asm.W, asm.gamma, substeps=0)

    def reactions(self, f_int):
        """Sum of internal forces over the prescribed dofs of each edge, ``{edge: (Rx, Ry)}``."""
        out = {}
        fixed = self.constraints.fixed
        for edge in ("left", "right", "bottom", "top"):
            dofs = np.stack([2 * self.mesh.edge_nodes(edge), 2 * self.mesh.edge_nodes(edge) + 1], axis=-1)
            out[edge] = tuple(float(np.sum(f_int[d][fixed[d]])) for d in dofs.T)
        return out

    def mean_stress(self, P):
        """Volume average of the Piola stress over the domain."""
        return P.mean(axis=0)


class _Failed(Exception):
    pass


def _linear_solve(K, b):
    # the stiffness is structurally symmetric; minimum degree on A+Aᵀ gives
    # about half the fill of the default column ordering
    try:
        return spla.splu(K, permc_spec="MMD_AT_PLUS_A").solve(b)
    except RuntimeError as exc:  # exactly singular factor
        raise _Failed(f"singular tangent ({exc})") from exc


def _attempt(problem, state, load, tol, max_iter):
    cons = problem.constraints
    asm_ = problem.assembler
    dg = (load - state.load) * cons.g
    try:
        asm = asm_.assemble(state.u, state.points)
        r_red = cons.reduce_vector(asm.f_int + asm.K @ dg)
        f_ref = max(np.linalg.norm(asm.f_int), np.linalg.norm(r_red))
        history = [float(np.linalg.norm(r_red))]
        u = state.u + dg
        it = 0
        while not history[-1] <= tol * f_ref:
            if it == max_iter or not np.isfinite(history[-1]) or history[-1] > 1e8 * max(history[0], 1e-300):
                raise _Failed(f"no convergence after {it} iterations (|r| = {history[-1]:.3e})")
            K_red = cons.reduce_matrix(asm.K)
            du = _linear_solve(K_red, -r_red)
            if not np.all(np.isfinite(du)):
                raise _Failed("singular tangent")
            u = u + cons.T @ du
            it += 1
            asm = asm_.assemble(u, state.points)
            r_red = cons.reduce_vector(asm.f_int)
            f_ref = max(f_ref, np.linalg.norm(asm.f_int))
            history.append(float(np.linalg.norm(r_red)))
            log.debug("load %.6g iteration %d |r| = %.3e", load, it, history[-1])
    except (LamfemError, np.linalg.LinAlgError) as exc:
        raise _Failed(str(exc)) from exc
    return SolutionState(u, asm.state, load, asm.f_int, asm.P, asm.W, asm.gamma, it, history)


def newton_solve(problem, state, load, tol=None, max_iter=None):
    """Advance the committed ``state`` to load factor ``load``.

    A failed increment is bisected and retried from the last committed
    state, at most ``problem.max_cuts`` levels deep.  Returns the accepted
    sub-increments (the last one is at ``load``).
    """
    tol = problem.tol if tol is None else tol
    max_iter = problem.max_iter if max_iter is None else max_iter

    def advance(st, target, depth):
        try:
            return [_attempt(problem, st, target, tol, max_iter)]
        except _Failed as exc:
            if depth == problem.max_cuts:
                raise GlobalDivergence(
                    f"step to load {target:.6g} failed after {depth} cuts: {exc}"
                ) from exc
            log.info("cutting step %.6g -> %.6g (%s)", st.load, target, exc)
            mid = 0.5 * (st.load + target)
            first = advance(st, mid, depth + 1)
            return first + advance(first[-1], target, depth + 1)

    return advance(state, load, 0)


def load_path(n_steps, path=(0.0, 1.0)):
    """Load factors visiting ``path`` with ``n_steps`` equal increments per segment."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    out = []
    for a, b in zip(path[:-1], path[1:]):
        out.extend(a + (b - a) * (k + 1) / n_steps for k in range(n_steps))
    return out


def run_load_steps(problem, n_steps, path=(0.0, 1.0), state=None, callback=None):
    """Solve the load path; returns one committed state per requested step."""
    state = problem.initial_state() if state is None else state
    trajectory = []
    for load in load_path(n_steps, path):
        subs = newton_solve(problem, state, load)
        state = replace(
            subs[-1],
            iterations=sum(s.iterations for s in subs),
            residuals=[r for s in subs for r in s.residuals],
            substeps=len(subs),
        )
        trajectory.append(state)
        if callback is not None:
            callback(state)
    return trajectory
