import numpy as np
import pytest

from conftest import central_difference, random_F, random_unit
from lamfem.laminate import (
    LaminateConfig,
    LaminateState,
    laminate_energy,
    local_gradients,
    respond,
    respond_small_strain,
    solve_c,
    stationarity_check,
)


def _traction_jump(r, N):
    return np.einsum("nij,nj->ni", r.P2 - r.P1, N)


class TestConfig:
    def test_rejects_bad_fraction(self, neo):
        with pytest.raises(ValueError):
            LaminateConfig([1.2], [[1.0, 0.0, 0.0]], neo, neo)

    def test_rejects_non_unit_normal(self, neo):
        with pytest.raises(ValueError):
            LaminateConfig([0.5], [[2.0, 0.0, 0.0]], neo, neo)


class TestKinematics:
    def test_local_gradients_average_and_jump(self, rng, neo):
        N = random_unit(rng, 4)
        cfg = LaminateConfig(rng.uniform(0, 1, 4), N, neo, neo)
        F = random_F(rng, 4)
        c = rng.normal(size=(4, 3))
        F1, F2 = local_gradients(F, c, cfg)
        e = cfg.eta[:, None, None]
        np.testing.assert_allclose((1 - e) * F1 + e * F2, F, atol=1e-15)
        np.testing.assert_allclose(F2 - F1, np.einsum("ni,nj->nij", c, N), atol=1e-15)


class TestHyperelasticLaminate:
    @pytest.fixture
    def case(self, rng, neo, stiff_neo):
        n = 20
        cfg = LaminateConfig(rng.uniform(0.05, 0.95, n), random_unit(rng, n), neo, stiff_neo)
        return cfg, random_F(rng, n, 0.15)

    def test_traction_continuity(self, case):
        cfg, F = case
        r = respond(F, cfg)
        scale = np.maximum(np.linalg.norm(r.P1, axis=(1, 2)), np.linalg.norm(r.P2, axis=(1, 2)))
        assert np.all(np.linalg.norm(_traction_jump(r, cfg.normal), axis=-1) <= 1e-10 * scale)

    def test_stationarity_of_energy(self, case):
        cfg, F = case
        r = respond(F, cfg)
        for k in range(3):
            one = cfg.take([k], F.shape[0])
            err = stationarity_check(F[k], r.state.c[k], one)
            assert np.linalg.norm(err) < 1e-7

    def test_stress_is_condensed_energy_gradient(self, case):
        cfg, F = case
        one = cfg.take([0], F.shape[0])

        def W(X):
            return respond(X, one).W

        r = respond(F[0], one)
        np.testing.assert_allclose(r.P, central_difference(W, F[0], 1e-6).reshape(3, 3), atol=1e-8)

    def test_consistent_tangent(self, case):
        cfg, F = case
        for k in range(3):
            one = cfg.take([k], F.shape[0])
            L = respond(F[k], one).tangent
            fd = central_difference(lambda X: respond(X, one).P, F[k], 1e-6).reshape(3, 3, 3, 3)
            np.testing.assert_allclose(L, fd, atol=1e-6 * np.abs(L).max())

    def test_iteration_history_shows_quadratic_convergence(self, case):
        cfg, F = case
        hist = []
        solve_c(F[:1], cfg.take([0], F.shape[0]), history=hist)
        r = np.array(hist)
        r = r[r > 1e-13 * r[0]]
        assert len(r) >= 3
        assert r[-1] <= 10.0 * r[-2] ** 2 / r[0]

    def test_equal_phases_give_zero_jump(self, rng, neo):
        cfg = LaminateConfig([0.3], random_unit(rng, 1), neo, neo)
        F = random_F(rng, 1, 0.2)[0]
        r = respond(F, cfg)
        np.testing.assert_allclose(r.state.c, 0.0, atol=1e-14)
        np.testing.assert_allclose(r.P, neo.piola_stress(F), atol=1e-14)


class TestSnapping:
    @pytest.mark.parametrize("eta, phase", [(0.0, 1), (5e-7, 1), (1.0, 2), (1 - 5e-7, 2)])
    def test_degenerate_fraction_uses_single_phase(self, rng, neo, stiff_neo, eta, phase):
        cfg = LaminateConfig([eta], [[1.0, 0.0, 0.0]], neo, stiff_neo)
        F = random_F(rng, 1, 0.1)[0]
        r = respond(F, cfg)
        model = neo if phase == 1 else stiff_neo
        np.testing.assert_allclose(r.P, model.piola_stress(F), atol=1e-14)
        np.testing.assert_array_equal(r.state.c, 0.0)


class TestLinearLaminate:
    def test_closed_form_matches_nonlinear_solver(self, rng, soft_elastic, stiff_elastic):
        n = 8
        cfg = LaminateConfig(rng.uniform(0.1, 0.9, n), random_unit(rng, n), soft_elastic, stiff_elastic)
        H = 0.01 * rng.normal(size=(n, 3, 3))
        eps = 0.5 * (H + np.swapaxes(H, 1, 2))
        sigma, Cbar, c = respond_small_strain(eps, cfg)
        r = respond(np.eye(3) + H, cfg)
        np.testing.assert_allclose(r.P, sigma, atol=1e-13)
        np.testing.assert_allclose(r.tangent, Cbar, atol=1e-12)

    def test_layered_bounds(self, soft_elastic, stiff_elastic):
        cfg = LaminateConfig([0.4], [[1.0, 0.0, 0.0]], soft_elastic, stiff_elastic)
        eps = np.diag([0.0, 1e-3, 0.0])
        sigma, _, _ = respond_small_strain(eps, cfg)
        s1 = soft_elastic.small_strain_stress(eps)
        s2 = stiff_elastic.small_strain_stress(eps)
        # normal traction is continuous, so σ̄ₓₓ lies between the phases' own responses
        assert min(s1[0, 0], s2[0, 0]) <= sigma[0, 0] <= max(s1[0, 0], s2[0, 0])


class TestInelasticLaminate:
    @pytest.fixture
    def cfg(self, j2, stiff_neo):
        N = np.array([0.8, 0.6, 0.0])
        return LaminateConfig([0.4], N[None], j2, stiff_neo)

    def test_incremental_tangent(self, cfg):
        F = np.eye(3) + np.array([[0.02, 0.03, 0.0], [0.0, -0.01, 0.0], [0.0, 0.0, 0.0]])
        state = LaminateState.virgin(1, cfg)
        r = respond(F[None], cfg, state)
        assert r.state.h1[0, -1] > 0.0
        fd = central_difference(lambda X: respond(X[None], cfg, state).P[0], F, 1e-7).reshape(3, 3, 3, 3)
        np.testing.assert_allclose(r.tangent[0], fd, atol=1e-4 * np.abs(fd).max())

    def test_history_advances_only_when_committed(self, cfg):
        F = np.eye(3) + np.diag([0.03, 0.0, 0.0])
        state = LaminateState.virgin(1, cfg)
        a = respond(F[None], cfg, state)
        b = respond(F[None], cfg, state)
        np.testing.assert_array_equal(a.P, b.P)
        np.testing.assert_array_equal(state.h1, 0.0)

    def test_energy_helper(self, cfg):
        F = np.eye(3) + np.diag([0.001, 0.0, 0.0])
        r = respond(F[None], cfg)
        W = laminate_energy(F[None], r.state.c, cfg, r.state.h1, r.state.h2)
        np.testing.assert_allclose(W, r.W, rtol=1e-12)


class TestInvariants:
    def test_objectivity(self, rng, neo, stiff_neo):
        from lamfem import tensor as T

        cfg = LaminateConfig([0.37], random_unit(rng, 1), neo, stiff_neo)
        F = random_F(rng, 1, 0.15)[0]
        Q = T.random_rotation(rng)
        np.testing.assert_allclose(respond(Q @ F, cfg).P, Q @ respond(F, cfg).P, atol=1e-10)

    def test_small_fraction_continuity(self, rng, neo, stiff_neo):
        F = random_F(rng, 1, 0.15)[0]
        N = random_unit(rng, 1)
        P1 = neo.piola_stress(F)
        errs = [np.abs(respond(F, LaminateConfig([e], N, neo, stiff_neo)).P - P1).max()
                for e in (1e-2, 1e-3, 1e-4)]
        # first-order approach to the pure phase-1 response
        np.testing.assert_allclose(np.array(errs[:-1]) / errs[1:], 10.0, rtol=0.1)

    def test_moduli_between_reuss_and_voigt(self, rng, soft_elastic, stiff_elastic):
        from lamfem import tensor as T

        for _ in range(5):
            eta = rng.uniform(0.1, 0.9)
            cfg = LaminateConfig([eta], random_unit(rng, 1), soft_elastic, stiff_elastic)
            _, C, _ = respond_small_strain(np.zeros((3, 3)), cfg)

            def voigt(A):
                # quadratic form on symmetric strains in an orthonormal basis
                E = T.SYM_BASIS * np.where(np.arange(6) < 3, 1.0, np.sqrt(0.5))[:, None, None]
                return np.einsum("aij,...ijkl,bkl->...ab", E, A, E)

            CV = (1 - eta) * voigt(soft_elastic.moduli) + eta * voigt(stiff_elastic.moduli)
            CR = np.linalg.inv((1 - eta) * np.linalg.inv(voigt(soft_elastic.moduli))
                               + eta * np.linalg.inv(voigt(stiff_elastic.moduli)))
            Cl = voigt(C)
            assert np.linalg.eigvalsh(CV - Cl).min() > -1e-12
            assert np.linalg.eigvalsh(Cl - CR).min() > -1e-12
