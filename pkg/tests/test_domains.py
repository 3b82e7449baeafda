import numpy as np
import pytest

from kobayashi.core_complex import min_levi_eigenvalue, sample_ball
from kobayashi.domains import (
    REGISTRY_NAMES,
    DomainError,
    angular_factor,
    ball,
    contains,
    get_domain,
    halfspace,
    kappa_ball_formula,
    model_2m,
    normal_ray,
    oscillating_closed_form,
    oscillating_poly,
    oscillation_checks,
    quadric,
    siegel,
)


class TestContains:
    def test_ball_center(self):
        assert contains(ball(2), np.zeros(2))

    def test_ball_boundary_excluded(self):
        assert not contains(ball(2), np.array([1, 0]))

    def test_siegel_interior(self):
        assert contains(siegel(), np.array([0, -0.1]))

    def test_outside_bounding_ball(self):
        assert not contains(halfspace(2), np.array([0, -3]))

    def test_batch(self):
        pts = np.array([[0, 0], [2, 0], [0, 0.5j]])
        np.testing.assert_array_equal(contains(ball(2), pts), [True, False, True])

    def test_bad_witness_rejected(self):
        from kobayashi.domains import Domain

        with pytest.raises(DomainError):
            Domain(name="x", n=1, r=lambda z: np.abs(z[..., 0]) ** 2 - 1, radius=2.0, witness=np.array([1.5]))


class TestOscillatingPolynomial:
    def test_value_at_i(self):
        assert oscillating_poly(2, 1)(np.array([1j])) == pytest.approx(-4.0, abs=1e-12)

    def test_value_at_one(self):
        assert oscillating_poly(2, 1)(np.array([1.0])) == pytest.approx(28.0)

    @pytest.mark.parametrize("m,l", [(2, 2), (2, 0), (0, 0), (5, 2)])
    def test_range_checked(self, m, l):
        with pytest.raises(ValueError):
            oscillating_poly(m, l)

    @pytest.mark.parametrize("m,l", [(2, 1), (3, 2), (4, 2), (5, 4)])
    def test_closed_form(self, rng, m, l):
        z = rng.normal(size=40) + 1j * rng.normal(size=40)
        np.testing.assert_allclose(oscillating_poly(m, l)(z[:, None]), oscillating_closed_form(m, l, z),
                                   rtol=1e-11, atol=1e-11)

    def test_real_valued(self, rng):
        z = (rng.normal(size=40) + 1j * rng.normal(size=40))[:, None]
        val = oscillating_poly(3, 2).evaluate(z)
        assert np.all(np.abs(val.imag) <= 1e-12 * (1 + np.abs(val)))

    def test_checks_m2_l1(self):
        rep = oscillation_checks(2, 1)
        assert rep.min_angular_factor == pytest.approx(-4.0, abs=1e-10)
        assert rep.argmin_theta == pytest.approx(np.pi / 2, abs=1e-10)
        assert rep.min_laplacian >= -1e-6 * rep.scale

    def test_checks_m3_l2(self):
        rep = oscillation_checks(3, 2)
        assert rep.min_angular_factor == pytest.approx(-16.0, abs=1e-10)
        assert rep.min_laplacian >= -1e-6 * rep.scale

    def test_angular_factor_formula(self):
        assert angular_factor(2, 1, 0.0) == pytest.approx(28.0)


class TestNormalRay:
    def test_halfspace(self):
        ray = normal_ray(siegel(), np.zeros(2), [0.1, 0.01])
        np.testing.assert_allclose(ray.normal, [0, 1])
        np.testing.assert_allclose(ray.points(), [[0, -0.1], [0, -0.01]])

    def test_ball(self):
        ray = normal_ray(ball(2), np.array([0, 1]), [0.5, 0.1])
        np.testing.assert_allclose(ray.normal, [0, 1], atol=1e-12)
        np.testing.assert_allclose(ray.points()[:, 1], [0.5, 0.9])

    def test_too_deep(self):
        with pytest.raises(DomainError, match="delta = 1.5"):
            normal_ray(quadric(), np.zeros(2), [1.5, 0.1])

    def test_not_boundary(self):
        with pytest.raises(DomainError):
            normal_ray(ball(2), np.zeros(2), [0.1])

    def test_monotone_penetration(self):
        for dom in (ball(2), quadric(), model_2m((2,))):
            P = dom.boundary_point
            deltas = 0.1 * 0.5 ** np.arange(8)
            ray = normal_ray(dom, P, deltas)
            depth = np.abs(dom.r(ray.points()))
            assert np.all(np.diff(depth) < 0)


class TestRegistry:
    @pytest.mark.parametrize("name", ["ball", "ball:3", "halfspace", "siegel", "quadric", "model-2m:2",
                                      "model-2m:2,3", "remark5:2,1", "oscillating:3,2"])
    def test_builtin(self, name):
        dom = get_domain(name)
        assert dom.contains(dom.witness)
        if dom.boundary_point is not None:
            assert abs(float(dom.r(dom.boundary_point))) < 1e-10

    def test_unknown(self):
        with pytest.raises(DomainError):
            get_domain("torus")

    def test_names_listed(self):
        assert "remark5" in REGISTRY_NAMES and "fl" in REGISTRY_NAMES

    @pytest.mark.parametrize("name", ["ball", "siegel", "quadric", "model-2m:2", "model-2m:2,3"])
    def test_builtin_plurisubharmonic(self, name):
        dom = get_domain(name)
        pts = sample_ball(dom.n, 1.0, 64, seed=3)
        assert np.min(min_levi_eigenvalue(dom.r, pts)) >= -1e-8


class TestExactMetric:
    def test_quadric_is_ball(self, rng):
        dom = quadric()
        pts = rng.normal(size=(50, 2)) + 1j * rng.normal(size=(50, 2))
        c = np.array([0, -0.5])
        np.testing.assert_array_equal(dom.contains(pts), np.linalg.norm(pts - c, axis=1) < 0.5)

    def test_ball_center(self):
        assert kappa_ball_formula(np.zeros(3), np.array([1, 2, 2])) == pytest.approx(3.0)

    def test_ball_normal_direction(self):
        # kappa along the radius at distance d from the sphere: 1/(1-|z|^2)
        z = np.array([0, 0.9])
        assert kappa_ball_formula(z, np.array([0, 1])) == pytest.approx(1 / (1 - 0.81))

    def test_outside(self):
        with pytest.raises(DomainError):
            kappa_ball_formula(np.array([2, 0]), np.array([1, 0]))
