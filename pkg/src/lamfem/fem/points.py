"""Gauss-point material assignment for the three discretisation methods.

ELA assigns a whole element to the phase found at its centre, GPLA assigns
each Gauss point to the phase at its location, and LET keeps pure elements
as they are and turns every cut element into a laminate with the element's
volume fraction and interface normal (shared by its four Gauss points).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import ConstitutiveError
from ..geometry import CUT, PHASE1, PHASE2, classify_elements, phase_at
from ..laminate import LaminateConfig, LaminateState, respond

N_GAUSS = 4


class Method(str, Enum):
    ELA = "ELA"
    GPLA = "GPLA"
    LET = "LET"


@dataclass
class PointState:
    """Per-Gauss-point history.  Pure phase-1 points use ``h1``, pure phase-2
    points ``h2``; laminate points use both plus the jump vector ``c``."""

    h1: np.ndarray
    h2: np.ndarray
    c: np.ndarray

    def copy(self):
        return PointState(self.h1.copy(), self.h2.copy(), self.c.copy())

    def take(self, sl):
        return PointState(self.h1[sl], self.h2[sl], self.c[sl])


@dataclass
class PointResult:
    P: np.ndarray  # (m, 3, 3)
    tangent: np.ndarray  # (m, 3, 3, 3, 3)
    W: np.ndarray  # (m,)
    state: PointState
    gamma: np.ndarray  # (m,) equivalent plastic strain (phase-averaged for laminates)


class PointSet:
    def __init__(self, phase1, phase2, kind, eta=None, normal=None):
        self.phase1 = phase1
        self.phase2 = phase2
        self.kind = np.asarray(kind, dtype=np.int8).ravel()
        n = self.kind.size
        self.eta = np.zeros(n) if eta is None else np.asarray(eta, dtype=float).ravel()
        self.normal = np.zeros((n, 3)) if normal is None else np.asarray(normal, dtype=float).reshape(n, 3)

    @property
    def n_points(self):
        return self.kind.size

    @classmethod
    def build(cls, mesh, levelset, method, phase1, phase2, n_sub=32):
        method = Method(method)
        ne = mesh.n_elements
        if method is Method.ELA:
            kind = np.repeat(phase_at(levelset, mesh.element_centers()), N_GAUSS)
            return cls(phase1, phase2, kind)
        if method is Method.GPLA:
            return cls(phase1, phase2, phase_at(levelset, mesh.gauss_coords()))
        ekind, eeta, enormal = classify_elements(levelset, mesh.element_lower(), (mesh.dx, mesh.dy), n_sub)
        eeta = np.where(ekind == CUT, eeta, 0.0)
        return cls(phase1, phase2, np.repeat(ekind, N_GAUSS), np.repeat(eeta, N_GAUSS),
                   np.repeat(enormal, N_GAUSS, axis=0))

    def element_kind(self):
        """Per-element label: 0/1 pure phase, 2 laminate, 3 mixed Gauss points."""
        k = self.kind.reshape(-1, N_GAUSS)
        out = k[:, 0].copy()
        out[np.any(k != k[:, :1], axis=1)] = 3
        return out

    def initial_state(self):
        n = self.n_points
        return PointState(self.phase1.initial_history(n), self.phase2.initial_history(n), np.zeros((n, 3)))

    def evaluate(self, F, sl, state_n):
        """Constitutive response of points ``sl`` (a slice) at gradients ``F``."""
        kind = self.kind[sl]
        m = F.shape[0]
        P = np.empty((m, 3, 3))
        A = np.empty((m, 3, 3, 3, 3))
        W = np.empty(m)
        gamma = np.zeros(m)
        h1 = np.array(state_n.h1[sl])
        h2 = np.array(state_n.h2[sl])
        c = np.array(state_n.c[sl])
        for k, model, hist in ((PHASE1, self.phase1, h1), (PHASE2, self.phase2, h2)):
            idx = np.flatnonzero(kind == k)
            if idx.size == 0:
                continue
            with _remap(sl, idx):
                r = model.state_update(F[idx], hist[idx])
                W[idx] = model.energy(F[idx], r.h)
            P[idx] = r.P
            A[idx] = r.tangent
            hist[idx] = r.h
            if r.h.shape[1]:
                gamma[idx] = r.h[:, -1]
        idx = np.flatnonzero(kind == CUT)
        if idx.size:
            eta = self.eta[sl][idx]
            cfg = LaminateConfig(eta, self.normal[sl][idx], self.phase1, self.phase2)
            with _remap(sl, idx):
                r = respond(F[idx], cfg, LaminateState(c[idx], h1[idx], h2[idx]))
            P[idx] = r.P
            A[idx] = r.tangent
            W[idx] = r.W
            c[idx] = r.state.c
            h1[idx] = r.state.h1
            h2[idx] = r.state.h2
            g1 = r.state.h1[:, -1] if r.state.h1.shape[1] else 0.0
            g2 = r.state.h2[:, -1] if r.state.h2.shape[1] else 0.0
            gamma[idx] = (1.0 - eta) * g1 + eta * g2
        return PointResult(P, A, W, PointState(h1, h2, c), gamma)


class _remap:
    """Translate batch-relative indices of constitutive errors to global points."""

    def __init__(self, sl, idx):
        self.offset = sl.start or 0
        self.idx = idx

    def __enter__(self):
        return self

    def __exit__(self, typ, exc, tb):
        if isinstance(exc, ConstitutiveError) and exc.index is not None:
            exc.index = self.offset + self.idx[exc.index]
        return False
