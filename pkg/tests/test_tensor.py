import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from lamfem import tensor as T
from lamfem.errors import NotSymmetric

finite = st.floats(-2.0, 2.0, allow_nan=False)
mat3 = arrays(np.float64, (3, 3), elements=finite)


class TestAlgebra:
    def test_ddot_and_norm(self, rng):
        A, B = rng.normal(size=(2, 5, 3, 3))
        np.testing.assert_allclose(T.ddot(A, B), np.einsum("nij,nij->n", A, B))
        np.testing.assert_allclose(T.norm(A), np.linalg.norm(A, axis=(1, 2)))

    def test_dev_is_traceless(self, rng):
        A = rng.normal(size=(4, 3, 3))
        np.testing.assert_allclose(T.trace(T.dev(A)), 0.0, atol=1e-14)

    def test_inverse_and_determinant(self, rng):
        A = np.eye(3) + 0.3 * rng.normal(size=(6, 3, 3))
        np.testing.assert_allclose(T.inv(A) @ A, np.broadcast_to(np.eye(3), A.shape), atol=1e-12)
        np.testing.assert_allclose(T.det(A), np.linalg.det(A), rtol=1e-13)

    def test_dyad_and_contraction(self, rng):
        a, b = rng.normal(size=(2, 3))
        np.testing.assert_allclose(T.dyad(a, b), np.outer(a, b))
        B = rng.normal(size=(3, 3))
        np.testing.assert_allclose(T.contract42(T.II, B), B, atol=1e-15)

    @given(mat3)
    def test_voigt_round_trip(self, A):
        S = T.sym(A)
        np.testing.assert_allclose(T.from_voigt(T.to_voigt(S)), S, atol=1e-15)

    @given(mat3, mat3)
    def test_voigt_dot_matches_double_contraction(self, A, B):
        S, R = T.sym(A), T.sym(B)
        np.testing.assert_allclose(T.voigt_dot(T.to_voigt(S), T.to_voigt(R)), T.ddot(S, R), atol=1e-12)

    def test_random_rotation_is_proper(self, rng):
        Q = T.random_rotation(rng)
        np.testing.assert_allclose(Q @ Q.T, np.eye(3), atol=1e-14)
        assert np.linalg.det(Q) == pytest.approx(1.0)


class TestSymmetricExponential:
    @settings(max_examples=60, deadline=None)
    @given(mat3)
    def test_matches_scipy(self, A):
        S = T.sym(A)
        np.testing.assert_allclose(T.sym_exp(S), expm(S), rtol=1e-12, atol=1e-12)

    def test_repeated_eigenvalues(self):
        S = np.diag([0.3, 0.3, 0.3 + 1e-9])
        np.testing.assert_allclose(T.sym_exp(S), expm(S), rtol=1e-13)
        np.testing.assert_allclose(T.sym_exp(np.zeros((3, 3))), np.eye(3), atol=1e-15)

    def test_rejects_non_symmetric(self):
        with pytest.raises(NotSymmetric):
            T.sym_exp(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))

    @pytest.mark.parametrize("spectrum", [[0.1, -0.4, 0.7], [0.2, 0.2, -0.5], [0.0, 0.0, 0.0]])
    def test_frechet_derivative(self, rng, spectrum):
        Q = T.random_rotation(rng)
        A = Q @ np.diag(spectrum) @ Q.T
        dA = rng.normal(size=(3, 3))
        eps = 1e-6
        fd = (expm(A + eps * dA) - expm(A - eps * dA)) / (2 * eps)
        np.testing.assert_allclose(T.sym_exp_frechet(A, dA), fd, atol=1e-8)

    def test_frechet_broadcasts_over_directions(self, rng):
        A = T.sym(rng.normal(size=(2, 3, 3)))
        dA = rng.normal(size=(2, 4, 3, 3))
        out = T.sym_exp_frechet(A[:, None], dA)
        assert out.shape == (2, 4, 3, 3)
        np.testing.assert_allclose(out[1, 2], T.sym_exp_frechet(A[1], dA[1, 2]), atol=1e-14)
