"""Element kernels and global assembly for plane-strain Q1 elements.

The kinematics are written in terms of the full deformation gradient with
``F₃₃ = 1``; only its in-plane block depends on the nodal displacements.
Element forces and stiffnesses use the in-plane blocks of ``P`` and ``dP/dF``,
so geometric stiffness is already part of the material tangent.  For a
geometrically linear material the same path yields the usual small-strain
stiffness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import shape_gradients
from .points import N_GAUSS, PointSet, PointState


@dataclass
class Assembly:
    f_int: np.ndarray  # (n_dofs,)
    K: sp.csr_matrix | None
    state: PointState
    P: np.ndarray  # (n_points, 3, 3)
    W: np.ndarray  # (n_points,)
    gamma: np.ndarray  # (n_points,)


def _element_dofs(conn):
    return np.stack([2 * conn, 2 * conn + 1], axis=-1).reshape(conn.shape[0], 8)


def deformation_gradients(dN, u_e):
    """``F`` at the Gauss points of a batch of elements, ``(ne, 4, 3, 3)``."""
    ue = u_e.reshape(-1, 4, 2)
    H = np.einsum("eai,gaJ->egiJ", ue, dN)
    F = np.broadcast_to(np.eye(3), H.shape[:2] + (3, 3)).copy()
    F[..., :2, :2] += H
    return F


def element_kernel(dN, wdet, u_e, points, first_element, state_n, tangent=True, tangent_scale=1.0):
    """Forces and stiffnesses for consecutive elements starting at ``first_element``."""
    ne = u_e.shape[0]
    F = deformation_gradients(dN, u_e).reshape(-1, 3, 3)
    sl = slice(N_GAUSS * first_element, N_GAUSS * (first_element + ne))
    res = points.evaluate(F, sl, state_n)
    P = res.P.reshape(ne, N_GAUSS, 3, 3)[..., :2, :2]
    f_e = wdet * np.einsum("egiJ,gaJ->eai", P, dN).reshape(ne, 8)
    K_e = None
    if tangent:
        A = res.tangent.reshape(ne, N_GAUSS, 3, 3, 3, 3)[..., :2, :2, :2, :2]
        K_e = (tangent_scale * wdet) * np.einsum("gaJ,egiJkL,gbL->eaibk", dN, A, dN).reshape(ne, 8, 8)
    return f_e, K_e, res


def element_force_and_stiffness(dx, dy, u_e, phase1, phase2, kind, state_n=None, eta=None, normal=None):
    """Single-element force ``(8,)``, stiffness ``(8, 8)`` and new point states.

    ``kind`` gives the material of each of the four Gauss points (0/1 pure
    phase, 2 laminate with ``eta``/``normal``).
    """
    kind = np.broadcast_to(np.asarray(kind, dtype=np.int8), (N_GAUSS,))
    eta = None if eta is None else np.broadcast_to(eta, (N_GAUSS,))
    normal = None if normal is None else np.broadcast_to(normal, (N_GAUSS, 3))
    pts = PointSet(phase1, phase2, kind, eta, normal)
    if state_n is None:
        state_n = pts.initial_state()
    dN = shape_gradients(dx, dy)
    f, K, res = element_kernel(dN, 0.25 * dx * dy, np.asarray(u_e, dtype=float)[None], pts, 0, state_n)
    return f[0], K[0], res.state


class Assembler:
    """Global force/tangent assembly over a mesh, processed in element chunks."""

    def __init__(self, mesh, points: PointSet, chunk=16384):
        self.mesh = mesh
        self.points = points
        self.chunk = chunk
        self.dN = shape_gradients(mesh.dx, mesh.dy)
        self.wdet = 0.25 * mesh.dx * mesh.dy
        self.edofs = _element_dofs(mesh.conn)
        rows = np.repeat(self.edofs, 8, axis=1).ravel()
        cols = np.tile(self.edofs, (1, 8)).ravel()
        ndof = mesh.n_dofs
        # CSR pattern once; later assemblies only accumulate values
        key = rows.astype(np.int64) * ndof + cols
        uniq, self._slot = np.unique(key, return_inverse=True)
        self._slot = self._slot.ravel()
        r = (uniq // ndof).astype(np.int64)
        self._indices = (uniq % ndof).astype(np.int32)
        self._indptr = np.searchsorted(r, np.arange(ndof + 1)).astype(np.int32)
        self._nnz = uniq.size
        self.tangent_scale = 1.0

    def assemble(self, u, state_n, tangent=True):
        mesh = self.mesh
        ne = mesh.n_elements
        ndof = mesh.n_dofs
        npts = self.points.n_points
        f = np.zeros(ndof)
        data = np.zeros(self._nnz) if tangent else None
        P = np.empty((npts, 3, 3))
        W = np.empty(npts)
        gamma = np.empty(npts)
        new = PointState(np.empty_like(state_n.h1), np.empty_like(state_n.h2), np.empty_like(state_n.c))
        for start in range(0, ne, self.chunk):
            stop = min(ne, start + self.chunk)
            edofs = self.edofs[start:stop]
            f_e, K_e, res = element_kernel(self.dN, self.wdet, u[edofs], self.points, start, state_n,
                                           tangent, self.tangent_scale)
            f += np.bincount(edofs.ravel(), weights=f_e.ravel(), minlength=ndof)
            if tangent:
                data += np.bincount(self._slot[64 * start:64 * stop], weights=K_e.ravel(),
                                    minlength=self._nnz)
            ps = slice(N_GAUSS * start, N_GAUSS * stop)
            P[ps] = res.P
            W[ps] = res.W
            gamma[ps] = res.gamma
            new.h1[ps] = res.state.h1
            new.h2[ps] = res.state.h2
            new.c[ps] = res.state.c
        K = sp.csr_matrix((data, self._indices, self._indptr), shape=(ndof, ndof)) if tangent else None
        return Assembly(f, K, new, P, W, gamma)
