"""Dense 3D tensor algebra.

Second-order tensors are numpy arrays of shape ``(..., 3, 3)``; fourth-order
tensors are ``(..., 3, 3, 3, 3)`` with ``A[..., i, j, k, l]``.  Every function
broadcasts over leading batch axes so that whole sets of Gauss points can be
processed at once.
"""

from __future__ import annotations

import numpy as np

from .errors import NotSymmetric, SingularTensor

I2 = np.eye(3)

# (11, 22, 33, 23, 13, 12), zero-based
VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))
_VI = np.array([p[0] for p in VOIGT_PAIRS])
_VJ = np.array([p[1] for p in VOIGT_PAIRS])

# symmetric basis tensors matching the Voigt ordering: unit entry on the
# diagonal, unit entries at (i, j) and (j, i) for shear slots
SYM_BASIS = np.zeros((6, 3, 3))
for _k, (_i, _j) in enumerate(VOIGT_PAIRS):
    SYM_BASIS[_k, _i, _j] = 1.0
    SYM_BASIS[_k, _j, _i] = 1.0

# unit directions E_kl for the 9 components of a general second-order tensor
UNIT_BASIS = np.eye(9).reshape(9, 3, 3)

# identity on second-order tensors: II[i, j, k, l] = d_ik d_jl
II = np.einsum("ik,jl->ijkl", I2, I2)


def norm(A):
    """Frobenius norm over the last two axes."""
    return np.sqrt(np.einsum("...ij,...ij->...", A, A))


def trace(A):
    return np.einsum("...ii->...", A)


def transpose(A):
    return np.swapaxes(A, -1, -2)


def sym(A):
    return 0.5 * (A + transpose(A))


def dev(A):
    return A - trace(A)[..., None, None] / 3.0 * I2


def ddot(A, B):
    """Double contraction ``A:B`` of two second-order tensors."""
    return np.einsum("...ij,...ij->...", A, B)


def det(A):
    return np.linalg.det(A)


def inv(A):
    """Inverse, rejecting tensors with ``|det A| <= 1e-14 ||A||^3``."""
    A = np.asarray(A, dtype=float)
    d = np.abs(det(A))
    scale = norm(A) ** 3
    bad = ~(d > 1e-14 * scale)
    if np.any(bad):
        raise SingularTensor(f"singular tensor ({np.count_nonzero(bad)} of {bad.size})")
    return np.linalg.inv(A)


def dyad(a, b):
    """Dyadic product ``(a ⊗ b)_ij = a_i b_j``."""
    return np.asarray(a)[..., :, None] * np.asarray(b)[..., None, :]


def contract42(A, B):
    """``(A:B)_ij = A_ijkl B_kl``."""
    return np.einsum("...ijkl,...kl->...ij", A, B)


def _check_symmetric(A, tol=1e-12):
    scale = np.maximum(1.0, norm(A))
    if np.any(norm(A - transpose(A)) > tol * scale):
        raise NotSymmetric("tensor is not symmetric")


def _expm_series(A):
    """Scaling-and-squaring Taylor exponential; used near repeated eigenvalues."""
    A = np.asarray(A, dtype=float)
    nrm = np.max(norm(A)) if A.size else 0.0
    s = max(0, int(np.ceil(np.log2(nrm / 0.25)))) if nrm > 0.25 else 0
    X = A / 2.0**s
    term = np.broadcast_to(I2, A.shape).copy()
    out = term.copy()
    for k in range(1, 21):
        term = term @ X / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def sym_exp(A):
    """Exponential of a symmetric tensor.

    Uses the spectral decomposition; batch entries whose eigenvalue gaps fall
    below ``1e-6 ||A||`` are evaluated with a scaled power series instead.
    """
    A = np.asarray(A, dtype=float)
    _check_symmetric(A)
    A = sym(A)
    lam, V = np.linalg.eigh(A)
    out = np.einsum("...ik,...k,...jk->...ij", V, np.exp(lam), V)
    gaps = np.minimum(lam[..., 1] - lam[..., 0], lam[..., 2] - lam[..., 1])
    near = gaps < 1e-6 * norm(A)
    if np.any(near):
        out[near] = _expm_series(A[near])
    return sym(out)


def _exp_divided_differences(lam):
    """First divided differences of exp on the eigenvalues, ``(..., 3, 3)``."""
    li = lam[..., :, None]
    lj = lam[..., None, :]
    d = li - lj
    small = np.abs(d) < 1e-8
    safe = np.where(small, 1.0, d)
    ratio = np.where(small, 1.0 + 0.5 * d + d * d / 6.0, np.expm1(safe) / safe)
    return np.exp(lj) * ratio


def sym_exp_frechet(A, dA):
    """Directional derivative of ``sym_exp`` at symmetric ``A`` along ``dA``.

    ``dA`` need not be symmetric.  ``A`` and ``dA`` broadcast against each
    other over leading axes (pass ``A[:, None]`` to take several directions
    per batch entry).
    """
    lam, V = np.linalg.eigh(sym(np.asarray(A, dtype=float)))
    gam = _exp_divided_differences(lam)
    Vt = transpose(V)
    return V @ (gam * (Vt @ dA @ V)) @ Vt


def to_voigt(A):
    """Symmetric tensor to Voigt vector (11, 22, 33, 23, 13, 12), no shear factors."""
    A = np.asarray(A)
    return A[..., _VI, _VJ]


def from_voigt(v):
    v = np.asarray(v, dtype=float)
    return np.einsum("...k,kij->...ij", v[..., :6], SYM_BASIS)


def voigt_dot(a, b):
    """``A:B`` for symmetric tensors stored as raw Voigt vectors.

    Shear slots are counted twice because each stands for two tensor entries.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    return np.sum(a[..., :3] * b[..., :3], axis=-1) + 2.0 * np.sum(a[..., 3:] * b[..., 3:], axis=-1)


def random_rotation(rng):
    """Uniformly distributed proper rotation."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q
