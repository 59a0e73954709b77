"""Error norms between nodal fields and reference solutions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import MeshMismatch
from ..fem.mesh import Mesh, shape_values

# 3-point Gauss rule on [-1, 1]
_G3 = np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
_W3 = np.array([5.0, 8.0, 5.0]) / 9.0


@dataclass(frozen=True, eq=False)
class NodalField:
    """Q1 displacement field ``u`` (flat, 2 per node) on ``mesh``."""

    mesh: Mesh
    u: np.ndarray

    def __call__(self, X):
        m = self.mesh
        X = np.asarray(X, dtype=float)
        s = (X[:, 0] - m.x0) / m.dx
        t = (X[:, 1] - m.y0) / m.dy
        i = np.clip(np.floor(s).astype(int), 0, m.nx - 1)
        j = np.clip(np.floor(t).astype(int), 0, m.ny - 1)
        xi = np.stack([2.0 * (s - i) - 1.0, 2.0 * (t - j) - 1.0], axis=-1)
        N = shape_values(xi)  # (n, 4)
        nodes = m.conn[j * m.nx + i]
        U = self.u.reshape(-1, 2)[nodes]  # (n, 4, 2)
        return np.einsum("na,nai->ni", N, U)


def interpolate(mesh, func):
    """Nodal (Q1) interpolant of ``func: X -> u`` on ``mesh``."""
    return NodalField(mesh, np.asarray(func(mesh.coords), dtype=float).ravel())


def _cell_quadrature(x0, y0, dx, dy, nx, ny):
    """Points ``(nx*ny*9, 2)`` and weights of a 3x3 Gauss rule on every cell of a grid."""
    gx, gy = np.meshgrid(_G3, _G3, indexing="xy")
    w = np.outer(_W3, _W3).ravel() * 0.25 * dx * dy
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    cx = x0 + (i.ravel() + 0.5) * dx
    cy = y0 + (j.ravel() + 0.5) * dy
    X = np.stack([cx[:, None] + 0.5 * dx * gx.ravel(), cy[:, None] + 0.5 * dy * gy.ravel()], axis=-1)
    return X.reshape(-1, 2), np.tile(w, nx * ny)


def _check_nested(coarse, fine):
    same_box = np.allclose([coarse.x0, coarse.y0, coarse.lx, coarse.ly],
                           [fine.x0, fine.y0, fine.lx, fine.ly], rtol=1e-12, atol=1e-14)
    if not same_box or fine.nx % coarse.nx or fine.ny % coarse.ny:
        raise MeshMismatch(
            f"{coarse.nx}x{coarse.ny} mesh is not nested in the {fine.nx}x{fine.ny} reference mesh"
        )


def l2_error(field, reference, n_sub=8, chunk=1 << 20):
    """Relative L2 norm ``‖u - u_ref‖ / ‖u_ref‖`` of the displacement difference.

    ``reference`` is either a :class:`NodalField` on a mesh nested in the
    same box (integrated cell by cell on the finer mesh, exact for the
    piecewise-bilinear difference) or a callable ``X -> u`` evaluated with a
    3x3 Gauss rule on ``n_sub × n_sub`` subcells of every element.
    """
    m = field.mesh
    if isinstance(reference, NodalField):
        _check_nested(m, reference.mesh)
        r = reference.mesh
        X, w = _cell_quadrature(r.x0, r.y0, r.dx, r.dy, r.nx, r.ny)
    else:
        X, w = _cell_quadrature(m.x0, m.y0, m.dx / n_sub, m.dy / n_sub, m.nx * n_sub, m.ny * n_sub)
    num = den = 0.0
    for start in range(0, X.shape[0], chunk):
        sl = slice(start, start + chunk)
        ref = np.asarray(reference(X[sl]))
        diff = field(X[sl]) - ref
        num += np.dot(w[sl], np.einsum("ni,ni->n", diff, diff))
        den += np.dot(w[sl], np.einsum("ni,ni->n", ref, ref))
    if den == 0.0:
        return float(np.sqrt(num))
    return float(np.sqrt(num / den))


def total_energy(problem, W):
    """Stored energy ``∫ W dV`` from Gauss-point energy densities."""
    return float(np.sum(W) * problem.assembler.wdet)


def energy_error(energy, reference_energy):
    """Relative difference of total stored energies."""
    if reference_energy == 0.0:
        return abs(energy)
    return abs(energy - reference_energy) / abs(reference_energy)
