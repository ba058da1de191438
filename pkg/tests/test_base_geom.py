import numpy as np
import pytest

from tmcurv.base_geom import (BasePointGeometry, ChartMetric,
                              DegeneratePlaneError, GeometryError,
                              SingularMetricError, christoffel,
                              nabla_riemann, ricci_base, riemann,
                              sectional_base)

from conftest import (FLAT_DOMAIN, FLAT_ROWS, HYPERBOLIC_DOMAIN,
                      HYPERBOLIC_ROWS, SPHERE_DOMAIN, SPHERE_ROWS)

FLAT = ChartMetric.from_strings(FLAT_ROWS, FLAT_DOMAIN)
SPHERE = ChartMetric.from_strings(SPHERE_ROWS, SPHERE_DOMAIN)
HYPERBOLIC = ChartMetric.from_strings(HYPERBOLIC_ROWS, HYPERBOLIC_DOMAIN)


def sphere_points(count=6, seed=0):
    rng = np.random.default_rng(seed)
    return [np.array([rng.uniform(0.4, 2.7), rng.uniform(0.1, 5.9)])
            for _ in range(count)]


class TestChristoffel:
    def test_flat_vanishes(self):
        assert np.all(christoffel(FLAT, [0.3, -1.1]) == 0.0)

    def test_round_sphere_values(self):
        # hand derivation from the Christoffel formula for diag(1, sin^2):
        # Gamma^1_22 = -sin cos, Gamma^2_12 = cot
        gam = christoffel(SPHERE, [np.pi / 4, 0.7])
        assert gam[0, 1, 1] == pytest.approx(-0.5, abs=1e-14)
        assert gam[1, 0, 1] == pytest.approx(1.0, abs=1e-14)
        assert gam[1, 1, 0] == pytest.approx(1.0, abs=1e-14)

    def test_half_plane_values(self):
        gam = christoffel(HYPERBOLIC, [0.0, 2.0])
        assert gam[1, 0, 0] == pytest.approx(0.5, abs=1e-14)
        assert gam[0, 0, 1] == pytest.approx(-0.5, abs=1e-14)

    def test_lower_index_symmetry(self):
        for x in sphere_points():
            gam = christoffel(SPHERE, x)
            np.testing.assert_allclose(gam, gam.transpose(0, 2, 1), atol=1e-14)

    def test_metric_compatibility(self):
        # assembled nabla g = d_a g_ij - Gamma^k_ai g_kj - Gamma^k_aj g_ik = 0
        for x in sphere_points():
            geo = BasePointGeometry(SPHERE, x)
            nabla_g = (geo.g1[:2]
                       - np.einsum("kai,kj->aij", geo.gamma0, geo.g0)
                       - np.einsum("kaj,ik->aij", geo.gamma0, geo.g0))
            assert float(np.abs(nabla_g).max()) <= 1e-10


class TestRiemann:
    def test_flat_vanishes(self):
        up, low = riemann(FLAT, [0.5, 0.5])
        assert np.all(up == 0.0) and np.all(low == 0.0)

    def test_sphere_lowered_value(self):
        # round sphere: g(R(d1,d2)d2, d1) = sin^2(x1)
        _, low = riemann(SPHERE, [np.pi / 4, 0.2])
        assert low[0, 1, 1, 0] == pytest.approx(0.5, abs=1e-12)

    def test_symmetries_and_first_bianchi(self):
        for metric in (SPHERE, HYPERBOLIC):
            for x in sphere_points() if metric is SPHERE else [[0.4, 1.2], [-0.8, 2.5]]:
                geo = BasePointGeometry(metric, x)
                low = geo.lowered
                assert np.abs(low + low.transpose(1, 0, 2, 3)).max() <= 1e-10
                assert np.abs(low + low.transpose(0, 1, 3, 2)).max() <= 1e-10
                assert np.abs(low - low.transpose(2, 3, 0, 1)).max() <= 1e-10
                bianchi = (low + np.einsum("ijkl->jkil", low)
                           + np.einsum("ijkl->kijl", low))
                assert np.abs(bianchi).max() <= 1e-10


MIXED = ChartMetric.from_strings(
    [["exp(x1*x2)", "0.2*sinh(x1*x2)"], ["0.2*sinh(x1*x2)", "1+x1^2*x2^2"]],
    [(-0.8, 0.8), (-0.8, 0.8)])


class TestMixedVariableMetric:
    """Cross-variable metric entries exercise mixed third derivatives of g."""

    def test_curvature_symmetries(self):
        geo = BasePointGeometry(MIXED, [0.45, -0.3])
        low = geo.lowered
        assert np.abs(low + low.transpose(1, 0, 2, 3)).max() <= 1e-10
        assert np.abs(low + low.transpose(0, 1, 3, 2)).max() <= 1e-10
        assert np.abs(low - low.transpose(2, 3, 0, 1)).max() <= 1e-10

    def test_second_bianchi(self):
        geo = BasePointGeometry(MIXED, [0.45, -0.3])
        nr = geo.nabla_riemann
        cyc = nr + np.einsum("mlkij->ilkjm", nr) + np.einsum("mlkij->jlkmi", nr)
        assert np.abs(cyc).max() <= 1e-10

    def test_gamma_derivatives_match_finite_differences(self):
        x = np.array([0.45, -0.3])
        geo = BasePointGeometry(MIXED, x)
        step = 1e-6
        for a in range(2):
            xp, xm = x.copy(), x.copy()
            xp[a] += step
            xm[a] -= step
            fd = (BasePointGeometry(MIXED, xp).gamma0
                  - BasePointGeometry(MIXED, xm).gamma0) / (2 * step)
            np.testing.assert_allclose(geo.gamma1[a], fd, atol=5e-9)
            fd2 = (BasePointGeometry(MIXED, xp).gamma1[:2]
                   - BasePointGeometry(MIXED, xm).gamma1[:2]) / (2 * step)
            np.testing.assert_allclose(geo.gamma2[a, :2], fd2, atol=5e-8)


class TestNablaRiemann:
    def test_flat_vanishes(self):
        assert np.all(nabla_riemann(FLAT, [0.1, 0.2]) == 0.0)

    def test_constant_curvature_is_locally_symmetric(self):
        for metric, x in ((SPHERE, [1.1, 0.7]), (HYPERBOLIC, [0.5, 1.8])):
            assert np.abs(nabla_riemann(metric, x)).max() <= 1e-10

    def test_second_bianchi(self):
        # cyclic sum over the derivative slot and the two direction slots
        for x in sphere_points(4):
            nr = nabla_riemann(SPHERE, x)
            cyc = (nr + np.einsum("mlkij->ilkjm", nr) + np.einsum("mlkij->jlkmi", nr))
            assert np.abs(cyc).max() <= 1e-10


class TestRicciAndSectional:
    def test_flat(self):
        assert np.all(ricci_base(FLAT, [0.0, 0.0]) == 0.0)
        assert sectional_base(FLAT, [0.0, 0.0], [1, 0], [0, 1]) == 0.0

    def test_sphere_identity_operator(self):
        np.testing.assert_allclose(ricci_base(SPHERE, [0.9, 0.4]), np.eye(2), atol=1e-12)

    def test_hyperbolic_negative_identity(self):
        np.testing.assert_allclose(ricci_base(HYPERBOLIC, [0.3, 1.4]), -np.eye(2),
                                   atol=1e-12)

    def test_frame_free_ricci_agrees(self):
        for x in sphere_points(4):
            geo = BasePointGeometry(SPHERE, x)
            via_inverse = np.einsum("lkcj,kj->lc", geo.riemann0, geo.ginv0)
            np.testing.assert_allclose(geo.ricci_q, via_inverse, atol=1e-12)

    def test_sectional_values(self):
        assert sectional_base(SPHERE, [np.pi / 4, 1.0], [1, 0], [0, 1]) == pytest.approx(1.0, abs=1e-12)
        assert sectional_base(HYPERBOLIC, [0.0, 2.0], [1, 0], [0, 1]) == pytest.approx(-1.0, abs=1e-12)

    def test_sectional_basis_invariance(self):
        rng = np.random.default_rng(9)
        x = [1.2, 0.8]
        base = sectional_base(SPHERE, x, [1, 0], [0, 1])
        for _ in range(5):
            m = rng.normal(size=(2, 2))
            while abs(np.linalg.det(m)) < 0.3:
                m = rng.normal(size=(2, 2))
            X = m[0, 0] * np.eye(2)[0] + m[0, 1] * np.eye(2)[1]
            Y = m[1, 0] * np.eye(2)[0] + m[1, 1] * np.eye(2)[1]
            val = sectional_base(SPHERE, x, X, Y)
            assert val == pytest.approx(base, rel=1e-10)

    def test_degenerate_plane(self):
        with pytest.raises(DegeneratePlaneError):
            sectional_base(HYPERBOLIC, [0.0, 2.0], [1, 0], [1, 0])


class TestFrames:
    def test_gram_schmidt_orthonormal(self):
        for x in sphere_points(4):
            geo = BasePointGeometry(SPHERE, x)
            gram = geo.frame.T @ geo.g0 @ geo.frame
            np.testing.assert_allclose(gram, np.eye(2), atol=1e-13)

    def test_deterministic_index_order(self):
        geo = BasePointGeometry(SPHERE, [0.9, 0.1])
        # first frame vector is the normalized first coordinate direction
        assert geo.frame[1, 0] == 0.0
        assert geo.frame[0, 0] == pytest.approx(1.0)


class TestErrors:
    def test_singular_metric_conditioning(self):
        bad = ChartMetric.from_strings([["1e13", "0"], ["0", "1e-13"]],
                                       [(-1, 1), (-1, 1)])
        with pytest.raises(SingularMetricError):
            BasePointGeometry(bad, [0.0, 0.0])

    def test_not_positive_definite(self):
        bad = ChartMetric.from_strings([["1", "0"], ["0", "-1"]], [(-1, 1), (-1, 1)])
        with pytest.raises(SingularMetricError):
            BasePointGeometry(bad, [0.0, 0.0])

    def test_asymmetric_metric(self):
        bad = ChartMetric.from_strings([["1", "x1"], ["0", "1"]], [(0.5, 1.5), (-1, 1)])
        with pytest.raises(GeometryError):
            BasePointGeometry(bad, [1.0, 0.0])

    def test_domain_box_validation(self):
        with pytest.raises(GeometryError):
            ChartMetric.from_strings(FLAT_ROWS, [(-1, 1)])
        with pytest.raises(GeometryError):
            ChartMetric.from_strings(FLAT_ROWS, [(1, 1), (-1, 1)])

    def test_contains_with_margin(self):
        metric = ChartMetric.from_strings(FLAT_ROWS, [(0.0, 1.0), (0.0, 1.0)])
        assert metric.contains([0.5, 0.5])
        assert not metric.contains([0.01, 0.5], margin=0.05)
