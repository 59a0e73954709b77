import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lamfem.errors import DegenerateLevelSet
from lamfem.geometry import (
    CUT,
    PHASE1,
    PHASE2,
    Circle,
    Complement,
    Cut,
    ElementBox,
    Intersection,
    Phase1,
    Phase2,
    Plane,
    Sampled,
    Union,
    classify_element,
    classify_elements,
    clipped_area_fraction,
    element_center_phase,
    gauss_phase_map,
    phase_at,
    volume_fraction,
)

UNIT = ElementBox(0.0, 0.0, 1.0, 1.0)


class TestLevelSets:
    def test_circle_sign_and_gradient(self):
        c = Circle((0.5, 0.5), 0.25)
        assert c(np.array([0.5, 0.5])) > 0 > c(np.array([0.0, 0.0]))
        np.testing.assert_allclose(c.gradient(np.array([[1.0, 0.5]])), [[-1.0, 0.0]])

    def test_interface_point_belongs_to_phase1(self):
        p = Plane((0.5, 0.0), (1.0, 0.0))
        assert phase_at(p, np.array([0.5, 0.3])) == PHASE1

    def test_plane_normal_is_normalised(self):
        p = Plane((0.0, 0.0), (3.0, 4.0))
        np.testing.assert_allclose(p.normal, [0.6, 0.8])
        assert p(np.array([3.0, 4.0])) == pytest.approx(5.0)

    def test_boolean_combinations(self):
        a = Plane((0.5, 0.0), (1.0, 0.0))
        b = Plane((0.0, 0.5), (0.0, 1.0))
        X = np.array([[0.75, 0.75], [0.75, 0.25], [0.25, 0.25]])
        np.testing.assert_array_equal(phase_at(Union(a, b), X), [1, 1, 0])
        np.testing.assert_array_equal(phase_at(Intersection(a, b), X), [1, 0, 0])
        np.testing.assert_array_equal(phase_at(Complement(a), X), [0, 0, 1])
        np.testing.assert_allclose(Union(a, b).gradient(X[1:2]), [[1.0, 0.0]])
        np.testing.assert_allclose(Complement(b).gradient(X[:1]), [[0.0, -1.0]])

    def test_sampled_reproduces_bilinear_field(self, tmp_path):
        x = np.linspace(0.0, 1.0, 5)
        X, Y = np.meshgrid(x, x, indexing="xy")
        vals = 2.0 * X - Y + 0.3 * X * Y - 0.1
        path = tmp_path / "ls.txt"
        path.write_text("5 5 0 0 0.25 0.25\n" + " ".join(str(float(v)) for v in vals.ravel()))
        s = Sampled.from_file(path)
        P = np.array([[0.13, 0.71], [0.9, 0.05]])
        exact = 2.0 * P[:, 0] - P[:, 1] + 0.3 * P[:, 0] * P[:, 1] - 0.1
        np.testing.assert_allclose(s(P), exact, atol=1e-14)
        np.testing.assert_allclose(s.gradient(P), np.stack([2 + 0.3 * P[:, 1], -1 + 0.3 * P[:, 0]], -1),
                                   atol=1e-13)

    def test_sampled_file_size_mismatch(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3 3 0 0 1 1\n1 2 3")
        with pytest.raises(ValueError, match="expected 9"):
            Sampled.from_file(path)


class TestAreaFractions:
    @pytest.mark.parametrize("offset", [0.1, 0.437, 0.9])
    def test_clipping_of_axis_plane(self, offset):
        assert clipped_area_fraction(Plane((offset, 0.0), (1.0, 0.0)), UNIT) == pytest.approx(1 - offset)

    def test_clipping_of_diagonal_plane(self):
        p = Plane((0.5, 0.5), (1.0, 1.0))
        assert clipped_area_fraction(p, UNIT) == pytest.approx(0.5)
        corner = Plane((0.75, 0.75), (1.0, 1.0))
        assert clipped_area_fraction(corner, UNIT) == pytest.approx(0.125)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.0, 2 * np.pi), st.floats(-0.2, 1.2))
    def test_complementary_planes_sum_to_one(self, theta, s):
        n = (np.cos(theta), np.sin(theta))
        pt = (0.5 + s * n[0], 0.5 + s * n[1])
        a = clipped_area_fraction(Plane(pt, n), UNIT)
        b = clipped_area_fraction(Plane(pt, (-n[0], -n[1])), UNIT)
        assert 0.0 <= a <= 1.0
        assert a + b == pytest.approx(1.0, abs=1e-12)

    def test_subsampling_converges_to_exact_fraction(self, rng):
        # aggregate over random cuts: the error shrinks with the sampling density
        e8, e64 = [], []
        for _ in range(40):
            th = rng.uniform(0, 2 * np.pi)
            p = Plane(tuple(rng.uniform(0.2, 0.8, 2)), (np.cos(th), np.sin(th)))
            exact = clipped_area_fraction(p, UNIT)
            e8.append(abs(volume_fraction(p, UNIT, 8) - exact))
            e64.append(abs(volume_fraction(p, UNIT, 64) - exact))
        assert np.mean(e64) < np.mean(e8) / 4
        assert max(e64) < 2.0 / 64

    def test_circle_area(self):
        c = Circle((0.5, 0.5), 0.3)
        assert volume_fraction(c, UNIT, 256) == pytest.approx(np.pi * 0.09, rel=1e-3)

    def test_bad_sampling(self):
        with pytest.raises(ValueError):
            volume_fraction(Circle((0, 0), 1), UNIT, 0)


class TestClassification:
    def test_single_element_kinds(self):
        p = Plane((0.3, 0.0), (1.0, 0.0))
        assert classify_element(p, ElementBox(0.0, 0.0, 0.2, 0.2)) == Phase1()
        assert classify_element(p, ElementBox(0.4, 0.0, 0.2, 0.2)) == Phase2()
        cut = classify_element(p, ElementBox(0.2, 0.0, 0.2, 0.2))
        assert isinstance(cut, Cut)
        assert cut.eta == pytest.approx(0.5)
        np.testing.assert_allclose(cut.normal, [1.0, 0.0, 0.0])

    def test_batch_plane_fractions_are_exact(self):
        th = 0.3
        p = Plane((0.41, 0.0), (np.cos(th), np.sin(th)))
        lower = np.array([[i, j] for j in np.arange(0, 1, 0.125) for i in np.arange(0, 1, 0.125)])
        kind, eta, normal = classify_elements(p, lower, (0.125, 0.125))
        for e in np.flatnonzero(kind == CUT):
            box = ElementBox(lower[e, 0], lower[e, 1], 0.125, 0.125)
            assert eta[e] == pytest.approx(clipped_area_fraction(p, box), abs=1e-14)
            np.testing.assert_allclose(normal[e], [np.cos(th), np.sin(th), 0.0], atol=1e-14)
        assert np.all(normal[kind != CUT] == 0.0)

    def test_circle_normals_point_into_inclusion(self):
        c = Circle((0.5, 0.5), 0.3)
        lower = np.array([[0.75, 0.45]])
        kind, eta, normal = classify_elements(c, lower, (0.1, 0.1))
        assert kind[0] == CUT
        assert normal[0, 0] < -0.9

    def test_sliver_snaps_to_pure_phase(self):
        thin = Plane((0.1 - 1e-8, 0.0), (1.0, 0.0))
        thick = Plane((1e-8, 0.0), (1.0, 0.0))
        kind, eta, _ = classify_elements(thin, [[0.0, 0.0]], (0.1, 0.1))
        assert kind[0] == PHASE1 and eta[0] < 1e-6
        kind, _, _ = classify_elements(thick, [[0.0, 0.0]], (0.1, 0.1))
        assert kind[0] == PHASE2

    def test_degenerate_gradient(self):
        # two parallel interfaces with opposite normals: the mean gradient cancels
        band = Union(Plane((0.75, 0.0), (1.0, 0.0)), Plane((0.25, 0.0), (-1.0, 0.0)))
        with pytest.raises(DegenerateLevelSet):
            classify_elements(band, [[0.0, 0.0]], (1.0, 1.0), n_sub=4)

    def test_center_and_gauss_assignment(self):
        p = Plane((0.4, 0.0), (1.0, 0.0))
        box = ElementBox(0.0, 0.0, 1.0, 1.0)
        assert element_center_phase(p, box) == 1
        np.testing.assert_array_equal(gauss_phase_map(p, box), [0, 1, 1, 0])


class TestClassificationProperties:
    def test_complement_swaps_phases(self):
        c = Circle((0.5, 0.5), 0.3)
        lower = np.array([[x, y] for y in np.arange(0, 1, 0.1) for x in np.arange(0, 1, 0.1)])
        k1, e1, n1 = classify_elements(c, lower, (0.1, 0.1))
        k2, e2, n2 = classify_elements(Complement(c), lower, (0.1, 0.1))
        swap = np.array([PHASE2, PHASE1, CUT])
        np.testing.assert_array_equal(k2, swap[k1])
        cut = k1 == CUT
        np.testing.assert_allclose(e2[cut], 1.0 - e1[cut], atol=1e-14)
        np.testing.assert_allclose(n2[cut], -n1[cut], atol=1e-14)

    @pytest.mark.parametrize("theta", [0.0, 0.3, 1.0])
    def test_translation_moves_fraction_continuously(self, theta):
        h = 0.1
        n = np.array([np.cos(theta), np.sin(theta)])
        box = ElementBox(0.0, 0.0, h, h)
        delta = 1e-4
        base = np.array([0.05, 0.05])
        a = clipped_area_fraction(Plane(tuple(base), tuple(n)), box)
        b = clipped_area_fraction(Plane(tuple(base + delta * n), tuple(n)), box)
        # the interface chord is h / max(|cos|, |sin|), so that bounds the rate
        chord = h / np.abs(n).max()
        assert abs(a - b) <= delta * chord / h**2 * (1 + 1e-6)

    def test_sampling_examples(self):
        half = Plane((0.5, 0.0), (1.0, 0.0))
        for n_sub in (2, 8, 32):
            assert volume_fraction(half, UNIT, n_sub) == 0.5
        c = Circle((0.5, 0.5), 0.3)
        assert abs(volume_fraction(c, UNIT, 64) - 0.2827433) < 5e-3
        assert volume_fraction(c, UNIT, 1) in (0.0, 1.0)
