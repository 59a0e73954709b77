"""Dirichlet and periodic constraints.

All constraints are reduced to one affine map ``u = T ũ + λ g`` between the
full displacement vector and the free unknowns ``ũ``, where ``λ`` is the
load factor.  Dirichlet dofs have an empty row in ``T``; a periodic slave
copies its master's row and adds ``λ H (X_s - X_m)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True, eq=False)
class Dirichlet:
    """``u[node, component] = λ · value`` (``values`` scalar or one per node)."""

    nodes: np.ndarray
    component: int
    values: np.ndarray | float = 0.0


@dataclass(frozen=True, eq=False)
class PeriodicPair:
    """``u_s = u_m + λ H (X_s - X_m)`` for paired slave/master nodes."""

    slaves: np.ndarray
    masters: np.ndarray
    grad: np.ndarray  # in-plane 2x2 macroscopic displacement gradient


class Constraints:
    def __init__(self, mesh, bcs):
        ndof = mesh.n_dofs
        fixed = np.zeros(ndof, dtype=bool)
        g = np.zeros(ndof)
        master = np.full(ndof, -1)
        offset = np.zeros(ndof)
        for bc in bcs:
            if isinstance(bc, Dirichlet):
                dofs = 2 * np.asarray(bc.nodes, dtype=int) + bc.component
                fixed[dofs] = True
                g[dofs] = np.broadcast_to(np.asarray(bc.values, dtype=float), dofs.shape)
        for bc in bcs:
            if isinstance(bc, PeriodicPair):
                s = np.asarray(bc.slaves, dtype=int)
                m = np.asarray(bc.masters, dtype=int)
                H = np.asarray(bc.grad, dtype=float)[:2, :2]
                dX = mesh.coords[s] - mesh.coords[m]
                jump = dX @ H.T
                for comp in (0, 1):
                    sd = 2 * s + comp
                    if np.any(fixed[sd]):
                        raise ValueError("a periodic slave dof is also prescribed")
                    if np.any(master[sd] >= 0):
                        raise ValueError("a node is slave to two masters")
                    master[sd] = 2 * m + comp
                    offset[sd] = jump[:, comp]
        # resolve master chains to their final (free or fixed) dof
        for _ in range(ndof):
            chained = np.flatnonzero((master >= 0) & (master[np.maximum(master, 0)] >= 0))
            if chained.size == 0:
                break
            mm = master[chained]
            offset[chained] += offset[mm]
            master[chained] = master[mm]
        else:
            raise ValueError("cyclic periodic constraints")

        slave = master >= 0
        root = np.where(slave, master, np.arange(ndof))
        g = np.where(slave, g[root] + offset, g)
        is_free = ~fixed & ~slave
        free = np.flatnonzero(is_free)
        red = np.full(ndof, -1)
        red[free] = np.arange(free.size)
        col = red[root]
        rows = np.flatnonzero(col >= 0)
        self.T = sp.csr_matrix((np.ones(rows.size), (rows, col[rows])), shape=(ndof, free.size))
        self.g = g
        self.fixed = fixed
        self.slave = slave
        self.free = free
        self.n_reduced = free.size

    def expand(self, u_red, load):
        return self.T @ u_red + load * self.g

    def reduce(self, u):
        return u[self.free]

    def reduce_vector(self, r):
        return self.T.T @ r

    def reduce_matrix(self, K):
        return (self.T.T @ K @ self.T).tocsc()


def affine_dirichlet(mesh, grad, nodes=None):
    """Prescribe ``u = H X`` (in-plane ``H``) on ``nodes`` (default: boundary)."""
    nodes = mesh.boundary_nodes() if nodes is None else np.asarray(nodes)
    u = mesh.coords[nodes] @ np.asarray(grad, dtype=float)[:2, :2].T
    return [Dirichlet(nodes, 0, u[:, 0]), Dirichlet(nodes, 1, u[:, 1])]


def field_dirichlet(mesh, func, nodes=None):
    """Prescribe ``u = func(X)`` on ``nodes`` (default: boundary)."""
    nodes = mesh.boundary_nodes() if nodes is None else np.asarray(nodes)
    u = np.asarray(func(mesh.coords[nodes]))
    return [Dirichlet(nodes, 0, u[:, 0]), Dirichlet(nodes, 1, u[:, 1])]


def periodic(mesh, grad):
    """Periodic fluctuations with macroscopic gradient ``grad``; corner node
    (0, 0) is held fixed to remove rigid translation."""
    j = np.arange(mesh.ny + 1)
    i = np.arange(mesh.nx)
    left = mesh.node(0, j)
    right = mesh.node(mesh.nx, j)
    bottom = mesh.node(i, 0)
    top = mesh.node(i, mesh.ny)
    corner = np.array([mesh.node(0, 0)])
    return [
        PeriodicPair(right, left, grad),
        PeriodicPair(top, bottom, grad),
        Dirichlet(corner, 0, 0.0),
        Dirichlet(corner, 1, 0.0),
    ]


def uniaxial(mesh, strain):
    """Left edge held in x, bottom edge held in y, right edge pulled by ``strain·lx``."""
    return [
        Dirichlet(mesh.edge_nodes("left"), 0, 0.0),
        Dirichlet(mesh.edge_nodes("bottom"), 1, 0.0),
        Dirichlet(mesh.edge_nodes("right"), 0, strain * mesh.lx),
    ]
