import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kobayashi import fornaess_lee as fl
from kobayashi.domains import get_domain, normal_ray


@pytest.fixture(scope="module")
def part1():
    return fl.schedule(2.0**30, "part1", 3, 0.02)


@pytest.fixture(scope="module")
def fl_domain(part1):
    return fl.build_fl_domain(part1, 3, psh_points=0)


class TestSchedule:
    def test_part1_first_terms(self):
        s = fl.schedule(2, "part1", 4, 0.1)
        assert s.a_n[0] == pytest.approx(2**0.3, rel=1e-14)
        assert s.a_n[0] == pytest.approx(1.231144, abs=1e-6)
        assert s.delta_n[0] == pytest.approx(0.125, rel=1e-14)
        assert s.r_n[0] == pytest.approx(0.812252, abs=1e-6)

    def test_product_is_one(self):
        s = fl.schedule(3.7, "part1", 5, 0.2)
        np.testing.assert_allclose(s.r_n * s.a_n, 1.0, rtol=1e-14)
        np.testing.assert_array_equal(s.log_r_n + s.log_a_n, 0.0)

    def test_part2_second_terms(self):
        s = fl.schedule(math.e, "part2", 4, 1.0)
        assert s.value("delta", 2) == pytest.approx(math.exp(-9), rel=1e-13)
        assert s.value("a", 2) == pytest.approx(9.0, rel=1e-13)
        assert s.value("r", 2) == pytest.approx(1 / 9, rel=1e-13)

    @pytest.mark.parametrize("a,mode,param", [(1.0, "part1", 0.1), (2, "part1", 0.0), (2, "part1", 0.34),
                                              (2, "part2", 0.0), (2, "part3", 1.0)])
    def test_parameter_range(self, a, mode, param):
        with pytest.raises(fl.ScheduleError):
            fl.schedule(a, mode, 3, param)

    def test_monotone(self):
        for s in (fl.schedule(2, "part1", 8, 0.1), fl.schedule(math.e, "part2", 8, 1.0)):
            assert np.all(np.diff(s.log_delta_n) < 0)
            assert np.all(np.diff(s.log_a_n) > 0)

    def test_exponent_bookkeeping(self, part1):
        for n in range(1, 4):
            lr = part1.log_value("r", n)
            assert part1.log_value("d", n) == 9 * lr
            assert part1.log_value("beta", n) == 9 * lr
            assert part1.log_value("c", n) == 18 * lr
            assert part1.log_value("C", n) + 20 * lr == 0
            assert part1.log_value("K", n) + 38 * lr == 0
            # K_n c_n = C_n exactly in exponent arithmetic
            assert fl.EXPONENTS["K"] + fl.EXPONENTS["c"] == fl.EXPONENTS["C"]
        assert part1.exponent_identity_holds()

    def test_corrector_dominates(self, part1):
        # -C_n + K_n c_n >= 0
        for n in range(1, 4):
            lhs = part1.log_value("K", n) + part1.log_value("c", n)
            assert lhs >= part1.log_value("C", n) - 1e-12 * abs(lhs)

    def test_json(self, part1):
        assert part1.to_json() == {"a": 2.0**30, "mode": "part1", "eps": 0.02, "N": 3, "S": [1, 2, 3]}


class TestInequality:
    def test_holds_eventually(self):
        s = fl.schedule(2, "part1", 8, 0.1)
        n0 = fl.check_An_inequality(s)
        assert 1 <= n0 <= 8

    def test_fails_above_threshold(self):
        s = fl.schedule(2, "part1", 8, 0.34, strict=False)
        with pytest.raises(fl.InequalityError):
            fl.check_An_inequality(s)

    def test_growth_rate(self):
        s = fl.schedule(2, "part1", 8, 0.1)
        ratio = np.exp(s.log_A_n - 2 * 0.1 * 3.0 ** s.indices * math.log(2))[2:]
        assert np.all(ratio > 0.5) and np.all(ratio < 2.0)


class TestSolveBn:
    def test_no_root_for_small_a(self):
        with pytest.raises(fl.NoRootError):
            fl.solve_bn(math.e)

    def test_root_for_e10(self):
        b = fl.solve_bn(math.exp(10))
        assert 0 < b < 0.025
        assert abs(0.125 - b + math.log(b) / 40) <= 1e-12

    def test_smallest_root(self):
        b = fl.solve_bn(math.exp(10))
        grid = np.linspace(1e-12, b, 2000)[:-1]
        assert np.all(0.125 - grid + np.log(grid) / 40 < 0)

    def test_decreasing_to_zero(self):
        roots = [fl.solve_bn(log_a=10 * 2**j) for j in range(8)]
        assert all(b < 1 / (4 * 10 * 2**j) for j, b in enumerate(roots))
        assert np.all(np.diff(roots) < 0)

    def test_huge_argument(self):
        assert fl.solve_bn(log_a=1000.0) > 0
        with pytest.raises(fl.NoRootError, match="underflows"):
            fl.solve_bn(log_a=1e4)

    def test_bad_input(self):
        with pytest.raises(fl.ScheduleError):
            fl.solve_bn(0.5)


class TestMollifier:
    def test_constant(self, rng):
        m = fl.mollify(lambda z: np.full(z.shape, 5.0), 0.1)
        z = rng.normal(size=10) + 1j * rng.normal(size=10)
        np.testing.assert_allclose(m(z), 5.0, rtol=1e-14)

    def test_harmonic(self, rng):
        m = fl.mollify(lambda z: z.real, 0.3)
        z = rng.normal(size=10) + 1j * rng.normal(size=10)
        np.testing.assert_allclose(m(z), z.real, atol=1e-14)

    def test_kink_at_origin(self):
        f = lambda z: np.maximum(z.real, 0.0)  # noqa: E731
        eps = 0.1
        coarse = fl.mollify(f, eps)(np.array([0j]))[0]
        fine = fl.mollify(f, eps, order=(64, 4096))(np.array([0j]))[0]
        assert 0 < coarse <= eps * fl.KERNEL_ABS_MOMENT
        # the mean of max(-cos, 0) over the circle is 1/pi
        assert fine == pytest.approx(eps * fl.KERNEL_ABS_MOMENT / math.pi, rel=1e-6)
        assert fl.mollify(f, eps).checked(np.array([0j]))[0] == pytest.approx(fine, abs=1e-8)

    def test_kernel_constants(self):
        assert fl.KERNEL_MASS == pytest.approx(0.46651239317833, rel=1e-10)
        assert 0 < fl.KERNEL_ABS_MOMENT < 1

    def test_radius_precondition(self):
        with pytest.raises(ValueError):
            fl.mollify(lambda z: z.real, 0.6, r_n=1.0)

    def test_non_convergence_reported(self):
        rough = lambda z: np.sign(np.sin(1e3 * np.abs(z - 0.1)))  # noqa: E731
        with pytest.raises(fl.QuadratureError):
            fl.mollify(rough, 1.0).checked(np.array([0.3 + 0j]), max_doublings=1)


class TestBlocks:
    @pytest.fixture(scope="class")
    @classmethod
    def block(cls):
        return fl.Block(10.0, -10.0)

    def test_linear_regime(self, block, rng):
        w = 2.5 + rng.random(20) * 10 + 1j * rng.normal(size=20)
        z = w / block.scale
        np.testing.assert_allclose(block.rho(z), block.u(w), rtol=1e-12)

    def test_real_valued(self, block, rng):
        z = (rng.normal(size=100) + 1j * rng.normal(size=100)) * 1e-4
        v = block.rho(z)
        assert v.dtype.kind == "f" and np.all(np.isfinite(v))

    def test_majorant(self, block, rng):
        # subharmonic mean value: smoothing never decreases the block
        t = rng.random(200)
        radius = block.zero_radius * 0.8 + t * (block.b * 1.3 - block.zero_radius * 0.8)
        w = radius * np.exp(2j * np.pi * rng.random(200))
        assert np.all(block.R_tilde(w) >= block.R(w) - 1e-12)

    def test_shortcuts_agree_with_quadrature(self, block):
        w = np.array([block.b + 2 * block.eps, 0.5 * block.zero_radius, -(block.b + 3 * block.eps)])
        direct = block._moll.checked(w)
        np.testing.assert_allclose(block.R_tilde(w), direct, atol=1e-8)

    def test_sup_ratio_tracks_scale(self):
        s = fl.schedule(2.0**50, "part1", 2, 0.1)
        b1, b2 = fl.rho_n(s, 1), fl.rho_n(s, 2)
        z = 2 * np.sqrt(np.linspace(0, 1, 400)) * np.exp(1j * np.linspace(0, 40 * np.pi, 400))
        ratio = np.max(np.abs(b2.rho(z))) / np.max(np.abs(b1.rho(z)))
        growth = b2.scale / b1.scale
        assert growth / 10 <= ratio <= growth * 10

    @pytest.mark.parametrize("k", [1, 2])
    def test_derivative_bound(self, block, rng, k):
        a, r = math.exp(block.log_a), math.exp(block.log_r)
        bound = (a / r**2) ** k * (a / r)
        z = 2 * np.sqrt(rng.random(100)) * np.exp(2j * np.pi * rng.random(100))
        h = 1e-3 / block.scale
        if k == 1:
            d = (block.rho(z + h) - block.rho(z - h)) / (2 * h)
        else:
            d = (block.rho(z + h) - 2 * block.rho(z) + block.rho(z - h)) / h**2
        assert np.max(np.abs(d)) <= bound

    def test_block_subharmonic(self, fl_domain):
        assert fl_domain.block_subharmonicity(3) >= -1e-3


class TestProjection:
    def test_fixed_point(self):
        p = fl.project_to_V(np.array([1, 1]), beta=1e-6)
        np.testing.assert_allclose(p.point, [1, 1])
        assert p.distance == 0

    def test_nearby(self):
        p = fl.project_to_V(np.array([8, 4 + 1e-6]), beta=1e-6)
        s, t = p.point
        assert abs(s**2 - t**3) <= 1e-10 * abs(s) ** 2
        assert p.distance == pytest.approx(1e-6, rel=1e-6)

    def test_inner_ball(self):
        with pytest.raises(fl.ProjectionError):
            fl.project_to_V(np.array([0, 1e-9]), beta=1e-6)

    def test_outside_tube(self):
        assert fl.project_to_V(np.array([1, 2]), beta=1e-6, tube_width=1e-3) is None

    def test_nearest_branch_chosen(self, rng):
        for _ in range(20):
            zeta = rng.normal() + 1j * rng.normal()
            p = np.array([zeta**3, zeta**2 + 1e-3 * (rng.normal() + 1j * rng.normal())])
            proj = fl.project_to_V(p, beta=1e-6)
            roots = np.roots([1, 0, 0, -p[0]])
            assert proj.distance <= np.min(np.abs(p[1] - roots**2)) + 1e-12


class TestLiftedBlocks:
    def test_zero_in_inner_ball(self, part1, fl_domain):
        beta = part1.value("beta", 3)
        assert fl_domain.p_n(3, np.array([0.1 * beta, 0]))[()] == 0

    def test_on_variety(self, part1, fl_domain):
        zeta = 0.5
        val = fl_domain.p_n(3, np.array([zeta**3, zeta**2]))
        assert val[()] == fl_domain.blocks[3].rho(np.array([zeta]))[0]

    def test_far_from_variety(self, fl_domain):
        assert fl_domain.p_n(3, np.array([1.0, 0.3]))[()] == 0

    def test_cutoff_shape(self):
        x = np.linspace(0, 2, 401)
        c = fl.smooth_cutoff(x)
        assert np.all(c[x <= 0.5] == 1) and np.all(c[x >= 1] == 0)
        assert np.all(np.diff(c) <= 0)

    def test_shell_continuity(self, part1, fl_domain):
        block = fl_domain.blocks[3]
        d = part1.value("d", 3)
        zeta = np.array([0.5, 0.5])
        for edge in (0.5, 1.0):
            v = fl.p_n_from_tube(block, d, zeta, d**2 * edge * np.array([1 - 1e-6, 1 + 1e-6]))
            scale = abs(block.rho(np.array([0.5]))[0])
            assert abs(v[0] - v[1]) < 1e-6 * scale


class TestCorrector:
    def test_zero_on_variety(self):
        assert fl.q_eval(np.array([1, 1]))[()] == 0

    def test_value(self):
        assert fl.q_eval(np.array([1, 0]))[()] == pytest.approx(math.e, rel=1e-15)

    def test_nonnegative(self, rng):
        p = rng.normal(size=(100, 2)) + 1j * rng.normal(size=(100, 2))
        assert np.all(fl.q_eval(p) >= 0)

    def test_levi_lower_bound(self, rng):
        from kobayashi.core_complex import levi_form

        p = 0.7 * (rng.normal(size=(30, 2)) + 1j * rng.normal(size=(30, 2)))
        X = rng.normal(size=(30, 2)) + 1j * rng.normal(size=(30, 2))
        lf = levi_form(fl.q_eval, p, X)
        assert np.all(lf >= fl.q_levi_lower(p, X) * (1 - 1e-6) - 1e-8)


class TestAssembledDomain:
    def test_active_indices(self, fl_domain):
        assert fl_domain.active == (3,)
        assert set(fl_domain.dropped) == {1, 2}

    def test_tail_bound(self, fl_domain):
        assert fl_domain.tail_bound() < 1e-12 * fl_domain.sup_rho

    def test_normal_ray_inside(self, fl_domain):
        dom = fl_domain.domain()
        ray = normal_ray(dom, np.zeros(3), 10.0 ** -np.arange(1, 6))
        assert np.all(dom.contains(ray.points()))

    def test_real_valued(self, fl_domain, rng):
        p = rng.normal(size=(50, 2)) + 1j * rng.normal(size=(50, 2))
        assert fl_domain.rho_tilde(p).dtype.kind == "f"

    def test_plurisubharmonic(self, fl_domain):
        report = fl_domain.psh_report(1000, seed=1)
        for name, entry in report.items():
            assert entry["passed"], name
            assert entry["min_relative"] > -1e-6

    def test_descriptor_round_trip(self, fl_domain, tmp_path, rng):
        path = tmp_path / "fl.json"
        path.write_text(json.dumps(fl_domain.descriptor()))
        dom = get_domain(f"fl:{path}")
        z = np.concatenate([rng.normal(size=(20, 3)) + 1j * rng.normal(size=(20, 3))])
        np.testing.assert_array_equal(dom.r(z), fl_domain.defining_function(z))

    def test_inline_descriptor(self):
        dom = fl.fl_domain_from_descriptor("a=2^30,eps=0.02,N=3")
        assert dom.n == 3 and dom.radius == 2.0

    def test_tail_violation(self):
        s = fl.schedule(2.0**30, "part1", 3, 0.02)
        with pytest.raises(fl.TailBoundError):
            fl.build_fl_domain(s, 3, tau_tail=1e-300, psh_points=0)

    def test_nothing_constructible(self):
        s = fl.schedule(2.0, "part1", 2, 0.1)
        with pytest.raises(fl.ScheduleError):
            fl.build_fl_domain(s, 2, psh_points=0)


class TestCertificates:
    def test_c1_converges(self, part1):
        cert = fl.smoothness_certificate(part1, 1)
        assert cert.m_k == 38 and cert.converges
        assert cert.partial_sums[3] == cert.partial_sums[-1]
        assert np.exp(cert.log_ratios[1]) < 1e-3

    def test_c1_diverges(self):
        cert = fl.smoothness_certificate(fl.schedule(2.0**30, "part1", 3, 0.05), 1)
        assert not cert.converges
        assert np.all(cert.log_ratios > 0)

    def test_m_k(self):
        assert [fl.m_k(k) for k in (1, 4, 5)] == [38, 38, 47]

    @pytest.mark.parametrize("k", [1, 4, 5, 8])
    def test_dichotomy(self, k):
        mk = fl.m_k(k)
        for factor, expected in ((0.9, True), (0.99, True), (1.01, False), (1.1, False)):
            eps = factor / mk
            if eps >= 1 / 3:
                continue
            cert = fl.smoothness_certificate(fl.schedule(2.0, "part1", 3, eps), k)
            assert cert.converges is expected
            assert bool(cert.log_ratios[-1] < 0) is expected

    def test_one_dimensional_exponent(self, part1):
        cert = fl.smoothness_certificate(part1, 2)
        assert cert.one_dim_exponent == 8 and cert.one_dim_converges

    def test_rejects_part2(self):
        with pytest.raises(fl.ScheduleError):
            fl.smoothness_certificate(fl.schedule(math.e, "part2", 30, 1.0), 1)

    @pytest.mark.parametrize("alpha,k", [(1.0, 10), (5.0, 50), (1.0, 0)])
    def test_part2(self, alpha, k):
        assert fl.part2_certificate(fl.schedule(math.e, "part2", 30, alpha), k)

    def test_part2_rejects_part1(self, part1):
        with pytest.raises(fl.ScheduleError):
            fl.part2_certificate(part1, 3)


class TestSubsequence:
    def test_greedy(self):
        s = fl.schedule(math.e, "part2", 30, 1.0)
        assert fl.subsequence_select(s) == (1, 3, 9, 27)

    def test_part1_all(self, part1):
        assert fl.subsequence_select(part1) == (1, 2, 3)

    def test_too_short(self):
        with pytest.raises(fl.ScheduleError):
            fl.subsequence_select(fl.schedule(math.e, "part2", 2, 1.0))


@given(a=st.floats(1.5, 1e6), eps=st.floats(0.01, 0.32), n=st.integers(2, 6))
def test_part1_radius_constraint(a, eps, n):
    s = fl.schedule(a, "part1", n, eps)
    lr, la = s.log_r_n, s.log_a_n
    assert np.all(lr[1:] <= 2 * lr[:-1] - la[:-1] + 1e-9 * np.abs(lr[1:]))


@given(alpha=st.floats(0.2, 4.0), N=st.integers(10, 40))
def test_greedy_pairs_satisfy_constraint(alpha, N):
    s = fl.schedule(math.e, "part2", N, alpha)
    S = s.selected
    for m, n in zip(S, S[1:]):
        assert s.log_r_n[n - 1] <= 2 * s.log_r_n[m - 1] - s.log_a_n[m - 1] + 1e-9 * abs(s.log_r_n[n - 1])
