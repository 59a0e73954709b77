"""Two-phase simple laminate at a material point.

Given the macroscopic deformation gradient ``F̄``, the phase-2 volume
fraction ``η`` and the reference interface normal ``N`` (pointing from phase 1
into phase 2), the phase gradients are

    F₁ = F̄ - η c⊗N,    F₂ = F̄ + (1-η) c⊗N,

and the jump vector ``c`` is found from traction continuity
``R = (P₂ - P₁) N = 0`` by Newton's method with backtracking.  The response
carries the averaged stress, the consistent tangent ``dP̄/dF̄`` (including
``dc/dF̄`` and the phase history sensitivities) and the updated state.

Everything is batched over points: ``F̄`` is ``(n, 3, 3)``, ``η`` is ``(n,)``
and ``N`` is ``(n, 3)``; scalars and single vectors broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import InterfaceDivergence, SingularAcousticTensor
from .materials import LinearElastic, StateUpdateResult

ETA_SNAP = 1e-6


@dataclass(frozen=True, eq=False)
class LaminateConfig:
    eta: np.ndarray
    normal: np.ndarray
    phase1: object
    phase2: object

    def __post_init__(self):
        eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        N = np.atleast_2d(np.asarray(self.normal, dtype=float))
        if np.any((eta < 0.0) | (eta > 1.0)):
            raise ValueError("volume fraction must lie in [0, 1]")
        if np.any(np.abs(np.linalg.norm(N, axis=-1) - 1.0) > 1e-12):
            raise ValueError("interface normal must have unit length")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "normal", N)

    @property
    def stress_scale(self):
        return max(self.phase1.stress_scale, self.phase2.stress_scale)

    def take(self, idx, n):
        """Configuration restricted to batch entries ``idx`` of a batch of ``n``."""
        eta = np.broadcast_to(self.eta, (n,))[idx]
        N = np.broadcast_to(self.normal, (n, 3))[idx]
        return LaminateConfig(eta, N, self.phase1, self.phase2)


@dataclass
class LaminateState:
    c: np.ndarray  # (n, 3)
    h1: np.ndarray  # (n, n_hist1)
    h2: np.ndarray  # (n, n_hist2)

    @classmethod
    def virgin(cls, n, cfg):
        return cls(np.zeros((n, 3)), cfg.phase1.initial_history(n), cfg.phase2.initial_history(n))

    def take(self, idx):
        return LaminateState(self.c[idx], self.h1[idx], self.h2[idx])

    def copy(self):
        return LaminateState(self.c.copy(), self.h1.copy(), self.h2.copy())


@dataclass
class LaminateResponse:
    P: np.ndarray  # averaged Piola stress
    tangent: np.ndarray  # dP̄/dF̄
    state: LaminateState
    W: np.ndarray  # averaged energy density
    F1: np.ndarray
    F2: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    iterations: np.ndarray


def _prep(Fbar, cfg):
    Fbar = np.asarray(Fbar, dtype=float)
    single = Fbar.ndim == 2
    if single:
        Fbar = Fbar[None]
    n = Fbar.shape[0]
    eta = np.broadcast_to(cfg.eta, (n,))
    N = np.broadcast_to(cfg.normal, (n, 3))
    return Fbar, eta, N, single


def local_gradients(Fbar, c, cfg):
    """Phase deformation gradients ``(F₁, F₂)``."""
    Fbar = np.asarray(Fbar, dtype=float)
    n = 1 if Fbar.ndim == 2 else Fbar.shape[0]
    eta = np.broadcast_to(cfg.eta, (n,))
    N = np.broadcast_to(cfg.normal, (n, 3))
    jump = T.dyad(np.asarray(c, dtype=float), N)
    if Fbar.ndim == 2:
        jump, eta = jump.reshape(3, 3), eta[0]
        return Fbar - eta * jump, Fbar + (1.0 - eta) * jump
    e = eta[:, None, None]
    return Fbar - e * jump, Fbar + (1.0 - e) * jump


class _Phases:
    """State updates of both phases at a trial ``c`` (batched)."""

    def __init__(self, Fbar, c, eta, N, cfg, h1n, h2n):
        jump = T.dyad(c, N)
        e = eta[:, None, None]
        self.F1 = Fbar - e * jump
        self.F2 = Fbar + (1.0 - e) * jump
        self.r1 = cfg.phase1.state_update(self.F1, h1n)
        self.r2 = cfg.phase2.state_update(self.F2, h2n)
        self.R = np.einsum("nij,nj->ni", self.r2.P - self.r1.P, N)
        self.rnorm = np.linalg.norm(self.R, axis=-1)
        self.pnorm = np.maximum(T.norm(self.r1.P), T.norm(self.r2.P))


def _admissible(Fbar, c, eta, N, cfg):
    """Points whose trial phase gradients keep positive Jacobians."""
    jump = T.dyad(c, N)
    e = eta[:, None, None]
    ok = (T.det(Fbar - e * jump) > 0) & (T.det(Fbar + (1.0 - e) * jump) > 0)
    if isinstance(cfg.phase1, LinearElastic) and isinstance(cfg.phase2, LinearElastic):
        ok[:] = True
    return ok


def interface_matrix(A1, A2, eta, N):
    """``B = ∂R/∂c = N·[(1-η) A₂ + η A₁]·N`` (acoustic-tensor form)."""
    e = eta[:, None, None, None, None]
    A = (1.0 - e) * A2 + e * A1
    return np.einsum("niJkL,nJ,nL->nik", A, N, N)


def traction_residual(Fbar, c, cfg, h1n, h2n):
    """``R = (P₂ - P₁) N`` with the phase stresses from their state updates."""
    Fb, eta, N, single = _prep(Fbar, cfg)
    c = np.atleast_2d(np.asarray(c, dtype=float))
    n = Fb.shape[0]
    ph = _Phases(Fb, np.broadcast_to(c, (n, 3)), eta, N, cfg,
                 _rows(h1n, n, cfg.phase1), _rows(h2n, n, cfg.phase2))
    return ph.R[0] if single else ph.R


def _rows(h, n, model):
    if model.n_hist == 0:
        return np.zeros((n, 0))
    if h is None:
        return model.initial_history(n)
    h = np.asarray(h, dtype=float)
    return np.broadcast_to(h, (n, model.n_hist)) if h.ndim == 1 else h


class _Solve:
    """Newton iteration for ``c`` over a batch, with per-point backtracking."""

    def __init__(self, Fbar, eta, N, cfg, state_n, tol=1e-12, max_iter=30, max_halvings=10,
                 history=None):
        n = Fbar.shape[0]
        self.c = np.array(state_n.c, dtype=float)
        h1n, h2n = state_n.h1, state_n.h2
        floor = 1e-15 * cfg.stress_scale
        ph = _Phases(Fbar, self.c, eta, N, cfg, h1n, h2n)
        self.iterations = np.zeros(n, dtype=int)
        # results are stored per point once converged
        self.F1 = ph.F1.copy()
        self.F2 = ph.F2.copy()
        self.r1 = ph.r1
        self.r2 = ph.r2
        self.R = ph.R.copy()
        conv = ph.rnorm <= tol * ph.pnorm + floor
        active = np.flatnonzero(~conv)
        if history is not None:
            history.append(ph.rnorm.copy())
        cur = _take_phases(ph, active)
        it = 0
        while active.size:
            if it == max_iter:
                raise InterfaceDivergence(
                    f"interface solve did not converge at {active.size} point(s)", active
                )
            it += 1
            a_eta, a_N, a_F = eta[active], N[active], Fbar[active]
            B = interface_matrix(cur.r1.tangent, cur.r2.tangent, a_eta, a_N)
            dc = -np.linalg.solve(B, cur.R[..., None])[..., 0]
            c_old = self.c[active]
            alpha = np.ones(active.size)
            trial_c = c_old + dc
            new = None
            pending = np.arange(active.size)
            accepted = np.zeros(active.size, dtype=bool)
            for _ in range(max_halvings + 1):
                ok = _admissible(a_F[pending], trial_c[pending], a_eta[pending], a_N[pending], cfg)
                cand = pending[ok]
                if cand.size:
                    ph_c = _Phases(a_F[cand], trial_c[cand], a_eta[cand], a_N[cand], cfg,
                                   h1n[active[cand]], h2n[active[cand]])
                    better = ph_c.rnorm <= cur.rnorm[cand] * (1.0 + 1e-12) + floor
                    if new is None:
                        new = _Buffer(active.size, ph_c)
                    # the last halving is accepted regardless, so the solve keeps moving
                    take = better | (alpha[cand] <= 0.5**max_halvings)
                    new.put(cand[take], ph_c, take)
                    accepted[cand[take]] = True
                pending = np.flatnonzero(~accepted)
                if pending.size == 0:
                    break
                alpha[pending] *= 0.5
                trial_c[pending] = c_old[pending] + alpha[pending, None] * dc[pending]
            if pending.size:
                raise InterfaceDivergence("line search failed (non-positive Jacobian)", active[pending])
            self.c[active] = trial_c
            self.iterations[active] += 1
            cur = new.phases()
            if history is not None:
                rec = np.zeros(n)
                rec[active] = cur.rnorm
                history.append(rec)
            conv = cur.rnorm <= tol * cur.pnorm + floor
            self._store(active[conv], cur, conv)
            active = active[~conv]
            cur = _take_phases(cur, np.flatnonzero(~conv))
        self.h1n, self.h2n = h1n, h2n

    def _store(self, idx, ph, mask):
        self.F1[idx] = ph.F1[mask]
        self.F2[idx] = ph.F2[mask]
        self.R[idx] = ph.R[mask]
        for name in ("r1", "r2"):
            dst, src = getattr(self, name), getattr(ph, name)
            dst.h[idx] = src.h[mask]
            dst.P[idx] = src.P[mask]
            dst.G[idx] = src.G[mask]
            if not dst.tangent.flags.writeable:
                dst.tangent = np.array(dst.tangent)
            dst.tangent[idx] = src.tangent[mask]
            dst.plastic[idx] = src.plastic[mask]


class _Sub:
    pass


def _take_phases(ph, idx):
    out = _Sub()
    out.F1, out.F2, out.R = ph.F1[idx], ph.F2[idx], ph.R[idx]
    out.rnorm, out.pnorm = ph.rnorm[idx], ph.pnorm[idx]
    out.r1 = _take_result(ph.r1, idx)
    out.r2 = _take_result(ph.r2, idx)
    return out


def _take_result(r, idx):
    return StateUpdateResult(h=r.h[idx], P=r.P[idx], G=r.G[idx], tangent=r.tangent[idx],
                             plastic=r.plastic[idx])


class _Buffer:
    """Collects accepted line-search candidates into one batch."""

    def __init__(self, m, like):
        self.F1 = np.empty((m, 3, 3))
        self.F2 = np.empty((m, 3, 3))
        self.R = np.empty((m, 3))
        self.rnorm = np.empty(m)
        self.pnorm = np.empty(m)
        self.r = [_empty_result(m, like.r1), _empty_result(m, like.r2)]

    def put(self, dest, ph, mask):
        self.F1[dest] = ph.F1[mask]
        self.F2[dest] = ph.F2[mask]
        self.R[dest] = ph.R[mask]
        self.rnorm[dest] = ph.rnorm[mask]
        self.pnorm[dest] = ph.pnorm[mask]
        for buf, src in zip(self.r, (ph.r1, ph.r2)):
            buf.h[dest] = src.h[mask]
            buf.P[dest] = src.P[mask]
            buf.G[dest] = src.G[mask]
            buf.tangent[dest] = src.tangent[mask]
            buf.plastic[dest] = src.plastic[mask]

    def phases(self):
        out = _Sub()
        out.F1, out.F2, out.R, out.rnorm, out.pnorm = self.F1, self.F2, self.R, self.rnorm, self.pnorm
        out.r1, out.r2 = self.r
        return out


def _empty_result(m, like):
    return StateUpdateResult(
        h=np.empty((m,) + like.h.shape[1:]),
        P=np.empty((m, 3, 3)),
        G=np.empty((m,) + like.G.shape[1:]),
        tangent=np.empty((m, 3, 3, 3, 3)),
        plastic=np.empty(m, dtype=bool),
    )


def solve_c(Fbar, cfg, state_n=None, *, tol=1e-12, max_iter=30, history=None):
    """Interface vector ``c`` satisfying traction continuity.

    The Newton matrix uses the algorithmic phase tangents, so the history
    sensitivities of inelastic phases enter ``∂R/∂c``.  ``η`` may sit at 0 or
    1 here (``B`` stays regular); snapping to a single phase happens in
    :func:`respond`.  When ``history`` is a list, the residual norms of every
    iteration are appended to it.
    """
    Fb, eta, N, single = _prep(Fbar, cfg)
    n = Fb.shape[0]
    if state_n is None:
        state_n = LaminateState.virgin(n, cfg)
    state_n = _state_rows(state_n, n, cfg)
    s = _Solve(Fb, eta, N, cfg, state_n, tol=tol, max_iter=max_iter, history=history)
    out = LaminateState(s.c, s.r1.h, s.r2.h)
    if single:
        return LaminateState(out.c[0], out.h1[0], out.h2[0])
    return out


def _state_rows(state, n, cfg):
    c = np.broadcast_to(np.asarray(state.c, dtype=float), (n, 3))
    return LaminateState(c, _rows(state.h1, n, cfg.phase1), _rows(state.h2, n, cfg.phase2))


def respond(Fbar, cfg, state_n=None, *, tol=1e-12, max_iter=30):
    """Averaged stress, consistent tangent, energy and updated state."""
    Fb, eta, N, single = _prep(Fbar, cfg)
    n = Fb.shape[0]
    if state_n is None:
        state_n = LaminateState.virgin(n, cfg)
    state_n = _state_rows(state_n, n, cfg)

    P = np.empty((n, 3, 3))
    L = np.empty((n, 3, 3, 3, 3))
    W = np.empty(n)
    F1 = Fb.copy()
    F2 = Fb.copy()
    P1 = np.empty((n, 3, 3))
    P2 = np.empty((n, 3, 3))
    c = np.array(state_n.c, dtype=float)
    h1 = np.array(state_n.h1, dtype=float)
    h2 = np.array(state_n.h2, dtype=float)
    iterations = np.zeros(n, dtype=int)

    lo = eta < ETA_SNAP
    hi = eta > 1.0 - ETA_SNAP
    mid = ~(lo | hi)
    for mask, model, hist, Pi in ((lo, cfg.phase1, h1, P1), (hi, cfg.phase2, h2, P2)):
        idx = np.flatnonzero(mask)
        if idx.size:
            r = model.state_update(Fb[idx], hist[idx])
            P[idx] = r.P
            Pi[idx] = r.P
            L[idx] = r.tangent
            W[idx] = model.energy(Fb[idx], r.h)
            hist[idx] = r.h
            c[idx] = 0.0
    idx = np.flatnonzero(mid)
    if idx.size:
        e, Nm, Fm = eta[idx], N[idx], Fb[idx]
        s = _Solve(Fm, e, Nm, cfg, state_n.take(idx), tol=tol, max_iter=max_iter)
        A1, A2 = s.r1.tangent, s.r2.tangent
        B = interface_matrix(A1, A2, e, Nm)
        dRdF = np.einsum("niJkL,nJ->nikL", A2 - A1, Nm)
        try:
            dcdF = -np.linalg.solve(B, dRdF.reshape(-1, 3, 9)).reshape(-1, 3, 3, 3)
        except np.linalg.LinAlgError as exc:
            raise SingularAcousticTensor(str(exc)) from exc
        ee = e[:, None, None]
        P[idx] = (1.0 - ee) * s.r1.P + ee * s.r2.P
        e4 = e[:, None, None, None, None]
        L[idx] = (
            (1.0 - e4) * A1
            + e4 * A2
            + e4 * (1.0 - e4) * np.einsum("niJmP,nP,nmkL->niJkL", A2 - A1, Nm, dcdF)
        )
        W[idx] = (1.0 - e) * cfg.phase1.energy(s.F1, s.r1.h) + e * cfg.phase2.energy(s.F2, s.r2.h)
        F1[idx], F2[idx] = s.F1, s.F2
        P1[idx], P2[idx] = s.r1.P, s.r2.P
        c[idx] = s.c
        h1[idx] = s.r1.h
        h2[idx] = s.r2.h
        iterations[idx] = s.iterations

    res = LaminateResponse(P, L, LaminateState(c, h1, h2), W, F1, F2, P1, P2, iterations)
    if single:
        return LaminateResponse(
            P[0], L[0], LaminateState(c[0], h1[0], h2[0]), W[0], F1[0], F2[0], P1[0], P2[0],
            iterations[0],
        )
    return res


def laminate_energy(Fbar, c, cfg, h1=None, h2=None):
    """``W̄(F̄, c) = (1-η) W₁(F₁) + η W₂(F₂)`` at frozen histories."""
    F1, F2 = local_gradients(Fbar, c, cfg)
    eta = cfg.eta if np.ndim(Fbar) > 2 else cfg.eta[0]
    return (1.0 - eta) * cfg.phase1.energy(F1, h1) + eta * cfg.phase2.energy(F2, h2)


def stationarity_check(Fbar, c, cfg, step=1e-6):
    """FD gradient of ``W̄`` w.r.t. ``c`` minus ``η(1-η)(P₂-P₁)N`` (single point)."""
    Fbar = np.asarray(Fbar, dtype=float)
    c = np.asarray(c, dtype=float)
    grad = np.empty(3)
    for k in range(3):
        d = np.zeros(3)
        d[k] = step
        grad[k] = (laminate_energy(Fbar, c + d, cfg) - laminate_energy(Fbar, c - d, cfg)) / (2 * step)
    F1, F2 = local_gradients(Fbar, c, cfg)
    eta = cfg.eta[0]
    N = cfg.normal[0]
    analytic = eta * (1.0 - eta) * (cfg.phase2.piola_stress(F2) - cfg.phase1.piola_stress(F1)) @ N
    return grad - analytic


def respond_small_strain(eps_bar, cfg, state_n=None):
    """Closed-form laminate of two linear-elastic phases.

    Returns ``(σ̄, C̄, c)``.  ``c`` solves the 3×3 system
    ``[(1-η) K₂ + η K₁] c = -(σ₂(ε̄) - σ₁(ε̄)) N`` with acoustic tensors
    ``K_i = N·C_i·N``; the phase strains are ``ε̄ ∓ sym(c⊗N)`` weighted by η.
    """
    eps = np.asarray(eps_bar, dtype=float)
    single = eps.ndim == 2
    if single:
        eps = eps[None]
    n = eps.shape[0]
    eta = np.broadcast_to(cfg.eta, (n,))
    N = np.broadcast_to(cfg.normal, (n, 3))
    C1 = cfg.phase1.moduli
    C2 = cfg.phase2.moduli
    K1 = np.einsum("iJkL,nJ,nL->nik", C1, N, N)
    K2 = np.einsum("iJkL,nJ,nL->nik", C2, N, N)
    B = (1.0 - eta)[:, None, None] * K2 + eta[:, None, None] * K1
    if np.any(np.abs(np.linalg.det(B)) <= 1e-14 * np.linalg.norm(B, axis=(1, 2)) ** 3):
        raise SingularAcousticTensor("laminate acoustic tensor is singular")
    s1 = cfg.phase1.small_strain_stress(eps)
    s2 = cfg.phase2.small_strain_stress(eps)
    rhs = -np.einsum("nij,nj->ni", s2 - s1, N)
    c = np.linalg.solve(B, rhs[..., None])[..., 0]
    jump = T.sym(T.dyad(c, N))
    e = eta[:, None, None]
    sig1 = cfg.phase1.small_strain_stress(eps - e * jump)
    sig2 = cfg.phase2.small_strain_stress(eps + (1.0 - e) * jump)
    sigma = (1.0 - e) * sig1 + e * sig2
    dR = np.einsum("iJkL,nJ->nikL", C2 - C1, N)
    dc = -np.linalg.solve(B, dR.reshape(n, 3, 9)).reshape(n, 3, 3, 3)
    dc = 0.5 * (dc + np.swapaxes(dc, -1, -2))
    e4 = eta[:, None, None, None, None]
    Cbar = (1.0 - e4) * C1 + e4 * C2 + e4 * (1.0 - e4) * np.einsum(
        "iJmP,nP,nmkL->niJkL", C2 - C1, N, dc
    )
    if single:
        return sigma[0], Cbar[0], c[0]
    return sigma, Cbar, c
