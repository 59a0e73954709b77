"""Phase constitutive models and the incremental state update.

All models share one interface over batches of deformation gradients
``F`` with shape ``(n, 3, 3)`` (a single ``(3, 3)`` tensor is accepted too):

* ``energy(F, h)`` -- stored energy density at frozen history,
* ``piola_stress(F, h)`` -- first Piola-Kirchhoff stress at frozen history,
* ``state_update(F, h_n)`` -- history at the end of the increment, the stress,
  the sensitivity ``G = dh/dF`` and the algorithmic tangent ``dP/dF``.

History vectors are stored as rows of a ``(n, n_hist)`` array.  For the J2
model the row is ``(Cp⁻¹₁₁-1, Cp⁻¹₂₂-1, Cp⁻¹₃₃-1, Cp⁻¹₂₃, Cp⁻¹₁₃, Cp⁻¹₁₂, γ)``;
elastic models carry an empty history.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import LocalDivergence, NonPositiveJacobian

N_J2_HIST = 7


@dataclass
class StateUpdateResult:
    h: np.ndarray  # (n, n_hist)
    P: np.ndarray  # (n, 3, 3)
    G: np.ndarray  # (n, n_hist, 9), row-major flattening of dF
    tangent: np.ndarray  # (n, 3, 3, 3, 3), dP/dF including G
    plastic: np.ndarray  # (n,) bool


def _batch(F):
    F = np.asarray(F, dtype=float)
    single = F.ndim == 2
    return (F[None] if single else F), single


def _unbatch(x, single):
    return x[0] if single else x


def _history_rows(h, n, n_hist):
    if n_hist == 0:
        return np.zeros((n, 0))
    if h is None:
        raise ValueError("history required")
    h = np.asarray(h, dtype=float)
    if h.ndim == 1:
        h = np.broadcast_to(h, (n, n_hist))
    return h


def _check_jacobian(F):
    J = T.det(F)
    bad = ~(J > 0.0)
    if np.any(bad):
        raise NonPositiveJacobian(
            f"det(F) <= 0 at {np.count_nonzero(bad)} point(s)", np.flatnonzero(bad)
        )
    return J


def lame_from_young(E, nu):
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return lam, mu


def isotropic_moduli(lam, mu):
    """Fourth-order isotropic elasticity tensor (minor and major symmetric)."""
    I = T.I2
    return (
        lam * np.einsum("ij,kl->ijkl", I, I)
        + mu * (np.einsum("ik,jl->ijkl", I, I) + np.einsum("il,jk->ijkl", I, I))
    )


@dataclass(frozen=True, eq=False)
class LinearElastic:
    """Geometrically linear isotropic elasticity with an optional eigenstrain.

    Used through the deformation-gradient interface with ``ε = sym(F - I)``,
    so ``P = σ`` and the tangent is the (constant) elasticity tensor.
    """

    E: float
    nu: float
    eigenstrain: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    n_hist = 0

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError("E must be positive")
        if not -1.0 < self.nu < 0.5:
            raise ValueError("nu must lie in (-1, 0.5)")
        eps0 = np.asarray(self.eigenstrain, dtype=float).reshape(3, 3)
        if T.norm(eps0 - eps0.T) > 1e-14 * max(1.0, T.norm(eps0)):
            raise ValueError("eigenstrain must be symmetric")
        object.__setattr__(self, "eigenstrain", eps0)
        lam, mu = lame_from_young(self.E, self.nu)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "moduli", isotropic_moduli(lam, mu))

    @property
    def stress_scale(self):
        return self.mu

    def small_strain_stress(self, eps):
        eps = np.asarray(eps, dtype=float)
        e = eps - self.eigenstrain
        return self.lam * T.trace(e)[..., None, None] * T.I2 + 2.0 * self.mu * e

    def energy(self, F, h=None):
        e = T.sym(np.asarray(F, dtype=float) - T.I2) - self.eigenstrain
        return 0.5 * self.lam * T.trace(e) ** 2 + self.mu * T.ddot(e, e)

    def piola_stress(self, F, h=None):
        return self.small_strain_stress(T.sym(np.asarray(F, dtype=float) - T.I2))

    def initial_history(self, n):
        return np.zeros((n, 0))

    def state_update(self, F, h_n=None):
        Fb, single = _batch(F)
        n = Fb.shape[0]
        res = StateUpdateResult(
            h=np.zeros((n, 0)),
            P=self.piola_stress(Fb),
            G=np.zeros((n, 0, 9)),
            tangent=np.broadcast_to(self.moduli, (n, 3, 3, 3, 3)),
            plastic=np.zeros(n, dtype=bool),
        )
        return _unbatch_result(res, single)


@dataclass(frozen=True, eq=False)
class NeoHookean:
    """Compressible neo-Hookean solid,
    ``W = μ/2 (I₁ - 3 - log I₃) + λ/4 (I₃ - 1 - log I₃)`` with invariants of ``b = F Fᵀ``."""

    mu: float
    lam: float

    n_hist = 0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.lam >= 0:
            raise ValueError("lambda must be non-negative")

    @property
    def stress_scale(self):
        return self.mu

    def initial_history(self, n):
        return np.zeros((n, 0))

    def energy(self, F, h=None):
        Fb, single = _batch(F)
        _check_jacobian(Fb)
        return _unbatch(_hyper_energy(self.mu, self.lam, Fb, None), single)

    def piola_stress(self, F, h=None):
        Fb, single = _batch(F)
        _check_jacobian(Fb)
        return _unbatch(_hyper_piola(self.mu, self.lam, Fb, None)[0], single)

    def state_update(self, F, h_n=None):
        Fb, single = _batch(F)
        _check_jacobian(Fb)
        n = Fb.shape[0]
        P, ctx = _hyper_piola(self.mu, self.lam, Fb, None)
        res = StateUpdateResult(
            h=np.zeros((n, 0)),
            P=P,
            G=np.zeros((n, 0, 9)),
            tangent=_piola_dF(ctx),
            plastic=np.zeros(n, dtype=bool),
        )
        return _unbatch_result(res, single)


@dataclass(frozen=True, eq=False)
class J2Plastic:
    """Finite-strain J2 plasticity with linear isotropic hardening.

    Multiplicative split written through ``Cp⁻¹``: ``b_e = F Cp⁻¹ Fᵀ`` carries
    the neo-Hookean energy, the Mises function acts on the Kirchhoff deviator
    and the flow rule is integrated with the exponential map.  The yield
    stress is ``σ_y(γ) = σ₀ + H γ``.
    """

    mu: float
    lam: float
    sigma0: float
    H: float = 0.0
    tol: float = 1e-12
    max_iter: int = 50

    n_hist = N_J2_HIST

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.lam >= 0:
            raise ValueError("lambda must be non-negative")
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        if not self.H >= 0:
            raise ValueError("hardening modulus must be non-negative")

    @property
    def stress_scale(self):
        return self.mu

    def yield_stress(self, gamma):
        return self.sigma0 + self.H * gamma

    def initial_history(self, n):
        return np.zeros((n, N_J2_HIST))

    def energy(self, F, h):
        Fb, single = _batch(F)
        _check_jacobian(Fb)
        C, _ = unpack_history(_history_rows(h, Fb.shape[0], N_J2_HIST))
        return _unbatch(_hyper_energy(self.mu, self.lam, Fb, C), single)

    def piola_stress(self, F, h):
        Fb, single = _batch(F)
        _check_jacobian(Fb)
        C, _ = unpack_history(_history_rows(h, Fb.shape[0], N_J2_HIST))
        return _unbatch(_hyper_piola(self.mu, self.lam, Fb, C)[0], single)

    def trial_yield(self, F, h_n):
        """Mises function evaluated with the history frozen at ``h_n``."""
        Fb, single = _batch(F)
        _check_jacobian(Fb)
        C, g = unpack_history(_history_rows(h_n, Fb.shape[0], N_J2_HIST))
        b = Fb @ C @ T.transpose(Fb)
        q = np.sqrt(1.5) * T.norm(self.mu * T.dev(b))
        return _unbatch(q - self.yield_stress(g), single)

    def local_residual(self, F, h, h_n):
        """Residual ``Q`` of the return mapping (6 components of 𝒵, then φ)."""
        Fb, single = _batch(F)
        _check_jacobian(Fb)
        n = Fb.shape[0]
        ctx = self._local(Fb, _history_rows(h, n, 7), _history_rows(h_n, n, 7))
        return _unbatch(ctx.Q, single)

    def _local(self, F, h, h_n):
        C, g = unpack_history(h)
        Cn, gn = unpack_history(h_n)
        return _J2Local(self, F, C, g, Cn, gn)

    def state_update(self, F, h_n):
        Fb, single = _batch(F)
        _check_jacobian(Fb)
        n = Fb.shape[0]
        h_n = np.array(_history_rows(h_n, n, N_J2_HIST), dtype=float)
        h = h_n.copy()
        G = np.zeros((n, N_J2_HIST, 9))

        phi = self.trial_yield(Fb, h_n)
        plastic = phi >= 0.0
        idx = np.flatnonzero(plastic)
        if idx.size:
            h_p, G_p = self._return_map(Fb[idx], h_n[idx])
            h[idx] = h_p
            G[idx] = G_p

        C, _ = unpack_history(h)
        P, ctx = _hyper_piola(self.mu, self.lam, Fb, C)
        tangent = _piola_dF(ctx)
        if idx.size:
            dPdh = _piola_dC(ctx, idx)  # (m, 3, 3, 7)
            tangent[idx] += np.einsum("mijh,mhk->mijk", dPdh, G[idx]).reshape(-1, 3, 3, 3, 3)
        res = StateUpdateResult(h=h, P=P, G=G, tangent=tangent, plastic=plastic)
        return _unbatch_result(res, single)

    def _predictor(self, F, h_n):
        """Starting history for the local Newton iteration.

        The exact return map keeps ``b_e`` coaxial with the trial ``b_e``, so
        it reduces to four unknowns in the trial principal frame: the log
        principal values ``β`` of ``b_e`` and ``Δγ``, with
        ``β = β_tr - 2Δγ n(β)`` and ``q(β) = σ_y(γₙ + Δγ)``.  Points where
        this small solve fails start from ``h_n`` instead.
        """
        Cn, gn = unpack_history(h_n)
        w, V = np.linalg.eigh(F @ Cn @ T.transpose(F))
        beta_tr = np.log(w)
        mu, H = self.mu, self.H
        beta = beta_tr.copy()
        s = mu * (w - w.mean(axis=-1, keepdims=True))
        q = np.sqrt(1.5 * np.sum(s * s, axis=-1))
        dgam = np.maximum(q - self.yield_stress(gn), 0.0) / (3.0 * mu + H)
        P3 = np.eye(3) - 1.0 / 3.0

        def residual(beta, dgam):
            b = np.exp(beta)
            s = mu * (b - b.mean(axis=-1, keepdims=True))
            q = np.sqrt(1.5 * np.sum(s * s, axis=-1))
            n = 1.5 * s / q[:, None]
            r = np.concatenate([beta - beta_tr + 2.0 * dgam[:, None] * n,
                                ((q - self.yield_stress(gn + dgam)) / mu)[:, None]], axis=-1)
            return r, b, s, q, n

        r, b, s, q, n = residual(beta, dgam)
        for _ in range(40):
            ds = mu * P3[None] * b[:, None, :]
            dq = 1.5 * np.einsum("ni,nij->nj", s, ds) / q[:, None]
            dn = 1.5 * (ds / q[:, None, None] - s[:, :, None] * dq[:, None, :] / q[:, None, None] ** 2)
            J = np.zeros((F.shape[0], 4, 4))
            J[:, :3, :3] = np.eye(3) + 2.0 * dgam[:, None, None] * dn
            J[:, :3, 3] = 2.0 * n
            J[:, 3, :3] = dq / mu
            J[:, 3, 3] = -H / mu
            dx = np.linalg.solve(J, -r[..., None])[..., 0]
            # halve steps that would increase the residual or make Δγ negative
            t = np.ones(F.shape[0])
            r0 = np.linalg.norm(r, axis=-1)
            for _ in range(12):
                cand = residual(beta + t[:, None] * dx[:, :3], dgam + t * dx[:, 3])
                worse = ~(np.linalg.norm(cand[0], axis=-1) <= r0) | (dgam + t * dx[:, 3] < 0.0)
                if not np.any(worse):
                    break
                t = np.where(worse, 0.5 * t, t)
            beta = beta + t[:, None] * dx[:, :3]
            dgam = dgam + t * dx[:, 3]
            r, b, s, q, n = residual(beta, dgam)
            if np.all(np.abs(t[:, None] * dx) <= 1e-14):
                break
        b = np.einsum("nij,nj,nkj->nik", V, np.exp(beta), V)
        Finv = T.inv(F)
        h = pack_history(T.sym(Finv @ b @ T.transpose(Finv)), gn + dgam)
        bad = ~(np.all(np.isfinite(h), axis=-1) & (dgam > 0.0) & (np.max(np.abs(r), axis=-1) < 1e-8))
        h[bad] = h_n[bad]
        return h

    def _return_map(self, F, h_n):
        h = self._predictor(F, h_n)
        active = np.arange(F.shape[0])
        for _ in range(self.max_iter):
            ctx = self._local(F[active], h[active], h_n[active])
            A = ctx.dQ_dh()
            dh = -np.linalg.solve(A, ctx.Q[..., None])[..., 0]
            h[active] += dh
            done = np.linalg.norm(dh, axis=-1) <= self.tol
            active = active[~done]
            if active.size == 0:
                break
        else:
            raise LocalDivergence(
                f"return mapping did not converge at {active.size} point(s)", active
            )
        ctx = self._local(F, h, h_n)
        G = -np.linalg.solve(ctx.dQ_dh(), ctx.dQ_dF())
        return h, G


def unpack_history(h):
    """Split J2 history rows into ``(Cp⁻¹, γ)``."""
    h = np.asarray(h, dtype=float)
    C = T.from_voigt(h[..., :6]) + T.I2
    return C, h[..., 6]


def pack_history(C, gamma):
    v = T.to_voigt(C) - np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    return np.concatenate([v, np.asarray(gamma)[..., None]], axis=-1)


def _unbatch_result(res, single):
    if not single:
        return res
    return StateUpdateResult(
        h=res.h[0], P=res.P[0], G=res.G[0], tangent=np.array(res.tangent[0]), plastic=res.plastic[0]
    )


def _hyper_energy(mu, lam, F, C):
    b = F @ T.transpose(F) if C is None else F @ C @ T.transpose(F)
    I1 = T.trace(b)
    I3 = T.det(b)
    logI3 = np.log(I3)
    return 0.5 * mu * (I1 - 3.0 - logI3) + 0.25 * lam * (I3 - 1.0 - logI3)


class _PiolaContext:
    __slots__ = ("mu", "lam", "F", "C", "Finv", "FinvT", "b", "I3", "tau")


def _hyper_piola(mu, lam, F, C):
    """``P = τ F⁻ᵀ`` with ``τ = μ(b - I) + λ/2 (I₃ - 1) I``, ``b = F Cp⁻¹ Fᵀ``."""
    ctx = _PiolaContext()
    ctx.mu, ctx.lam, ctx.F = mu, lam, F
    ctx.C = np.broadcast_to(T.I2, F.shape) if C is None else C
    ctx.Finv = np.linalg.inv(F)
    ctx.FinvT = T.transpose(ctx.Finv)
    ctx.b = F @ ctx.C @ T.transpose(F)
    ctx.I3 = T.det(ctx.b)
    ctx.tau = mu * (ctx.b - T.I2) + (0.5 * lam * (ctx.I3 - 1.0))[..., None, None] * T.I2
    return ctx.tau @ ctx.FinvT, ctx


def _piola_dF(ctx):
    """``∂P/∂F`` at frozen ``Cp⁻¹``, returned as ``(n, 3, 3, 3, 3)``.

    ``∂P_iJ/∂F_kL = μ δ_ik C_LJ + (μ F C - P)_iL F⁻¹_Jk + λ I₃ F⁻¹_Ji F⁻¹_Lk``.
    """
    Finv, C = ctx.Finv, ctx.C
    P = ctx.tau @ ctx.FinvT
    A = ctx.mu * ctx.F @ C - P
    out = np.einsum("niL,nJk->niJkL", A, Finv)
    out += (ctx.lam * ctx.I3)[:, None, None, None, None] * np.einsum("nJi,nLk->niJkL", Finv, Finv)
    out += ctx.mu * np.einsum("ik,nLJ->niJkL", T.I2, C)
    return out


def _piola_dC(ctx, idx):
    """``∂P/∂h`` for the selected points, ``(m, 3, 3, 7)`` (γ column is zero)."""
    F = ctx.F[idx][:, None]
    C = ctx.C[idx]
    dC = T.SYM_BASIS  # (6, 3, 3)
    db = F @ dC @ T.transpose(F)
    Cinv = np.linalg.inv(C)
    tr = np.einsum("nij,kji->nk", Cinv, dC)
    dtau = ctx.mu * db + (0.5 * ctx.lam * ctx.I3[idx][:, None] * tr)[..., None, None] * T.I2
    dP = dtau @ ctx.FinvT[idx][:, None]  # (m, 6, 3, 3)
    out = np.zeros((len(idx), 3, 3, N_J2_HIST))
    out[..., :6] = np.moveaxis(dP, 1, -1)
    return out


class _J2Local:
    """Return-mapping residual and its linearisation at one iterate.

    Q = {𝒵₁₁, 𝒵₂₂, 𝒵₃₃, 𝒵₂₃, 𝒵₁₃, 𝒵₁₂, φ} with
    𝒵 = F Cp⁻¹ - exp(-2Δγ n) F Cp,n⁻¹ and n = ∂φ/∂τ = (3/2) τ'/q.
    """

    def __init__(self, model, F, C, g, Cn, gn):
        self.model = model
        self.F, self.C, self.Cn = F, C, Cn
        self.dgam = g - gn
        self.b = F @ C @ T.transpose(F)
        self.s = model.mu * T.dev(self.b)
        self.q = np.sqrt(1.5) * T.norm(self.s)
        self.n = 1.5 * self.s / self.q[:, None, None]
        self.M = -2.0 * self.dgam[:, None, None] * self.n
        self.E = T.sym_exp(self.M)
        self.FCn = F @ Cn
        Z = F @ C - self.E @ self.FCn
        phi = self.q - model.yield_stress(g)
        self.Q = np.concatenate([T.to_voigt(Z), phi[:, None]], axis=-1)

    def _dQ(self, db, dZ_direct, dFCn, dgam):
        """Linearised residual for stacked directions (axis 1)."""
        mu = self.model.mu
        q = self.q[:, None]
        s = self.s[:, None]
        ds = mu * T.dev(db)
        dq = 1.5 * T.ddot(s, ds) / q
        dn = 1.5 * (ds / q[..., None, None] - s * (dq / q**2)[..., None, None])
        dM = -2.0 * (self.dgam[:, None, None, None] * dn + dgam[..., None, None] * self.n[:, None])
        dE = T.sym_exp_frechet(self.M[:, None], dM)
        dZ = dZ_direct - dE @ self.FCn[:, None]
        if dFCn is not None:
            dZ = dZ - self.E[:, None] @ dFCn
        dphi = dq - self.model.H * dgam
        return np.concatenate([T.to_voigt(dZ), dphi[..., None]], axis=-1)

    def dQ_dh(self):
        """``∂Q/∂h`` as ``(n, 7, 7)``."""
        n = self.F.shape[0]
        F = self.F[:, None]
        dC = np.concatenate([T.SYM_BASIS, np.zeros((1, 3, 3))])  # γ direction has dC = 0
        db = F @ dC @ T.transpose(F)
        dZ_direct = F @ dC
        dgam = np.broadcast_to(np.r_[np.zeros(6), 1.0], (n, 7))
        return np.swapaxes(self._dQ(db, dZ_direct, None, dgam), 1, 2)

    def dQ_dF(self):
        """``∂Q/∂F`` as ``(n, 7, 9)``."""
        n = self.F.shape[0]
        dF = T.UNIT_BASIS
        F = self.F[:, None]
        C = self.C[:, None]
        db = dF @ C @ T.transpose(F) + F @ C @ T.transpose(dF)
        dZ_direct = dF @ C
        dFCn = dF @ self.Cn[:, None]
        return np.swapaxes(self._dQ(db, dZ_direct, dFCn, np.zeros((n, 9))), 1, 2)
