"""Structured Q1 meshes and the shared reference quadrature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import GAUSS_2x2

# node corners in reference coordinates, counter-clockwise from (-1, -1)
_CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


@dataclass(frozen=True, eq=False)
class Mesh:
    nx: int
    ny: int
    x0: float
    y0: float
    lx: float
    ly: float
    coords: np.ndarray  # (n_nodes, 2)
    conn: np.ndarray  # (n_elements, 4)

    @property
    def dx(self):
        return self.lx / self.nx

    @property
    def dy(self):
        return self.ly / self.ny

    @property
    def n_nodes(self):
        return self.coords.shape[0]

    @property
    def n_elements(self):
        return self.conn.shape[0]

    @property
    def n_dofs(self):
        return 2 * self.n_nodes

    def node(self, i, j):
        return j * (self.nx + 1) + i

    def edge_nodes(self, edge):
        i = np.arange(self.nx + 1)
        j = np.arange(self.ny + 1)
        if edge == "left":
            return self.node(0, j)
        if edge == "right":
            return self.node(self.nx, j)
        if edge == "bottom":
            return self.node(i, 0)
        if edge == "top":
            return self.node(i, self.ny)
        raise ValueError(f"unknown edge {edge!r}")

    def boundary_nodes(self):
        return np.unique(np.concatenate([self.edge_nodes(e) for e in ("left", "right", "bottom", "top")]))

    def element_lower(self):
        """Lower-left corner of every element, ``(n_elements, 2)``."""
        return self.coords[self.conn[:, 0]]

    def element_centers(self):
        return self.element_lower() + 0.5 * np.array([self.dx, self.dy])

    def gauss_coords(self):
        """Physical Gauss point coordinates, ``(n_elements, 4, 2)``."""
        half = 0.5 * np.array([self.dx, self.dy])
        return self.element_centers()[:, None, :] + GAUSS_2x2[None] * half


def build_mesh(nx, ny, box=((0.0, 0.0), (1.0, 1.0))):
    """Regular ``nx × ny`` rectangle mesh with lexicographic numbering."""
    if nx < 1 or ny < 1:
        raise ValueError("need at least one element per direction")
    (x0, y0), (x1, y1) = box
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    coords = np.stack([X.ravel(), Y.ravel()], axis=-1)
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    n0 = (j * (nx + 1) + i).ravel()
    conn = np.stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1], axis=-1)
    return Mesh(nx, ny, float(x0), float(y0), float(x1 - x0), float(y1 - y0), coords, conn)


def shape_values(xi):
    """Bilinear shape functions at reference points ``(m, 2)`` -> ``(m, 4)``."""
    xi = np.atleast_2d(xi)
    return 0.25 * (1 + xi[:, None, 0] * _CORNERS[None, :, 0]) * (1 + xi[:, None, 1] * _CORNERS[None, :, 1])


def shape_gradients(dx, dy, xi=GAUSS_2x2):
    """Physical shape-function gradients ``(m, 4, 2)`` for a ``dx × dy`` element."""
    xi = np.atleast_2d(xi)
    a = _CORNERS[None, :, 0]
    b = _CORNERS[None, :, 1]
    dxi = 0.25 * a * (1 + b * xi[:, None, 1])
    deta = 0.25 * b * (1 + a * xi[:, None, 0])
    return np.stack([dxi * 2.0 / dx, deta * 2.0 / dy], axis=-1)
