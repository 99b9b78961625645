import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import j0

from fermigas.soft_potential import (
    MomentumCutoff,
    annulus_U,
    build_kernel,
    build_kit,
    envelope_f_R,
    fit_w_scalings,
    lattice_sum_constant,
    lattice_sum_sup,
    nearest_neighbor_count_I_R,
    nu_of_R,
    ramp_profile,
    sampled_f_R,
    soft_field_W_Y,
    unit_kernel,
    w_R_potential,
)


def kernel_by_quad(r, dimension):
    """h_1(r) from a direct radial Fourier integral of 1 - l(p) over p in [0, 2]."""
    one_minus = lambda p: 1.0 - float(ramp_profile(p))
    if dimension == 3:
        if r == 0:
            f = lambda p: p * p * one_minus(p)
        else:
            f = lambda p: p * math.sin(p * r) / r * one_minus(p)
        val = quad(f, 0, 1, epsabs=1e-14)[0] + quad(f, 1, 2, epsabs=1e-14, limit=200)[0]
        return val * 4 * math.pi / (2 * math.pi) ** 1.5
    f = lambda p: p * j0(p * r) * one_minus(p)
    val = quad(f, 0, 1, epsabs=1e-14)[0] + quad(f, 1, 2, epsabs=1e-14, limit=200)[0]
    return val * 2 * math.pi / (2 * math.pi)


@pytest.fixture(scope="module")
def kit3():
    return build_kit(3, 4.0, 1.0, 0.5, 0.5)


@pytest.fixture(scope="module")
def kit2():
    return build_kit(2, 4.0, 1.0, 0.5, 0.5)


class TestCutoff:
    def test_ramp_plateaus(self):
        assert np.all(ramp_profile([0.0, 0.5, 1.0, -1.0]) == 0.0)
        assert np.all(ramp_profile([2.0, 3.0, 50.0]) == 1.0)
        mid = ramp_profile(np.linspace(1.05, 1.9, 50))
        assert np.all((mid > 0) & (mid < 1)) and np.all(np.diff(mid) > 0)

    def test_trivial_cutoff(self):
        c = MomentumCutoff(0.0)
        assert c.trivial
        assert np.all(c.chi([0.0, 1.0, 10.0]) == 1.0)
        k = build_kernel(c, 3)
        assert np.all(k(np.linspace(0, 5, 11)) == 0.0)

    def test_negative_cutoff_rejected(self):
        with pytest.raises(ValueError):
            MomentumCutoff(-1.0)

    def test_band_edge(self):
        assert MomentumCutoff(4.0).band_edge == 0.5


@pytest.mark.parametrize("dimension", [2, 3])
class TestKernel:
    def test_table_matches_direct_transform(self, dimension):
        k = build_kernel(MomentumCutoff(1.0), dimension)
        for r in (0.0, 0.3, 1.7, 4.0, 9.5):
            assert k(np.array(r)) == pytest.approx(kernel_by_quad(r, dimension), abs=1e-10)

    def test_table_matches_unit_kernel(self, dimension):
        k = build_kernel(MomentumCutoff(1.0), dimension)
        r = np.array([0.05, 0.8, 2.2, 13.0, 40.0])
        assert np.allclose(k(r), unit_kernel(r, dimension), atol=1e-11)

    def test_scaling(self, dimension):
        k1 = build_kernel(MomentumCutoff(1.0), dimension)
        ks = build_kernel(MomentumCutoff(3.0), dimension)
        r = np.linspace(0, 20, 41)
        assert np.allclose(ks(r), 3.0 ** -dimension * k1(r / 3.0), rtol=1e-12, atol=0)

    def test_integral_matches_transform_at_zero(self, dimension):
        k = build_kernel(MomentumCutoff(2.0), dimension)
        assert k.integral() == pytest.approx(k.transform_at_zero(), rel=1e-6)

    def test_tail_bound_dominates(self, dimension):
        k = build_kernel(MomentumCutoff(1.0), dimension)
        r = np.linspace(0, 60, 3001)
        assert np.all(k.tail_bound(r) >= np.abs(k(r)) - 1e-15)


@pytest.mark.parametrize("dimension", [2, 3])
class TestEnvelope:
    def test_zero_radius(self, dimension):
        k = build_kernel(MomentumCutoff(2.0), dimension)
        f = envelope_f_R(k, 0.0)
        assert np.all(f(np.linspace(0, 10, 21)) == 0.0)
        assert f.integral() == 0.0

    def test_radius_above_half_cutoff_rejected(self, dimension):
        k = build_kernel(MomentumCutoff(2.0), dimension)
        with pytest.raises(ValueError):
            envelope_f_R(k, 1.5)

    def test_mean_value_bound(self, dimension):
        k = build_kernel(MomentumCutoff(2.0), dimension)
        f = envelope_f_R(k, 1.0)
        assert f.sup() <= f.mean_value_bound() * (1 + 1e-9)

    def test_sampled_below_envelope(self, dimension):
        k = build_kernel(MomentumCutoff(2.0), dimension)
        f = envelope_f_R(k, 1.0)
        rng = np.random.default_rng(3)
        for rx in (0.0, 0.4, 1.3, 3.0, 7.7):
            x = np.zeros(dimension)
            x[0] = rx
            assert sampled_f_R(k, 1.0, x, rng=rng) <= f(np.array(rx)) + 1e-14

    def test_sampled_approaches_envelope(self, dimension):
        k = build_kernel(MomentumCutoff(2.0), dimension)
        f = envelope_f_R(k, 1.0)
        x = np.zeros(dimension)
        x[0] = 2.5
        exact = float(f(np.array(2.5)))
        assert sampled_f_R(k, 1.0, x, samples=20000) == pytest.approx(exact, rel=1e-2)

    def test_radially_symmetric(self, dimension):
        k = build_kernel(MomentumCutoff(2.0), dimension)
        rng = np.random.default_rng(5)
        x = rng.normal(size=dimension)
        x *= 1.8 / np.linalg.norm(x)
        e = np.zeros(dimension)
        e[-1] = 1.8
        a = sampled_f_R(k, 0.7, x, samples=5000, rng=np.random.default_rng(1))
        b = sampled_f_R(k, 0.7, e, samples=5000, rng=np.random.default_rng(1))
        assert a == pytest.approx(b, rel=2e-2)

    def test_monotone_in_radius(self, dimension):
        k = build_kernel(MomentumCutoff(2.0), dimension)
        r = np.linspace(0, 12, 61)
        prev = np.zeros_like(r)
        for R in (0.2, 0.5, 0.8, 1.0):
            cur = envelope_f_R(k, R)(r)
            assert np.all(cur >= prev - 1e-15)
            prev = cur


class TestAnnulus:
    def test_3d_integral(self):
        U = annulus_U(0.5, 2.0, 0.3, 3)
        assert U.integral == pytest.approx(4 * math.pi, rel=1e-14)

    def test_2d_log_moment(self):
        U = annulus_U(0.5, 2.0, 0.3, 2)
        assert U.log_moment() == pytest.approx(2 * math.pi, abs=1e-10)

    def test_2d_nu_sandwich(self):
        for R0, R, a in ((0.5, 2.0, 0.3), (1.0, 10.0, 1.0), (0.01, 5.0, 0.001)):
            lo, nu, hi = annulus_U(R0, R, a, 2).nu_sandwich()
            assert lo <= nu <= hi

    def test_nu_closed_form_against_quadrature(self):
        val = quad(lambda r: r * math.log(r / 0.3), 0.5, 2.0)[0]
        assert nu_of_R(0.5, 2.0, 0.3) == pytest.approx(val, rel=1e-12)

    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            annulus_U(2.0, 1.0, 0.3, 3)
        with pytest.raises(ValueError):
            annulus_U(0.2, 1.0, 0.3, 3)

    def test_nu_rejected_in_3d(self):
        with pytest.raises(ValueError):
            annulus_U(0.5, 2.0, 0.3, 3).nu_sandwich()


class TestSoftPotential:
    def test_trivial_cutoff_gives_zero(self):
        kit = build_kit(3, 0.0, 1.0, 0.5, 0.5)
        assert np.all(kit.w_R(np.linspace(0, 5, 11)) == 0.0)

    def test_report_consistency(self, kit3):
        rep = w_R_potential(kit3)
        assert rep["sup_w"] > 0 and rep["int_w"] > 0
        assert rep["envelope_sup"] <= rep["mean_value_bound"] * (1 + 1e-9)
        assert rep["int_w"] == pytest.approx(2 / math.pi**2 * rep["envelope_integral"] ** 2)

    def test_scaling_covariance(self):
        """Doubling s and R together scales w_R by 2^-d at doubled radius."""
        for d in (2, 3):
            a = build_kit(d, 4.0, 1.0, 0.5, 0.5)
            b = build_kit(d, 8.0, 2.0, 1.0, 1.0)
            r = np.array([0.0, 1.5, 6.0, 20.0])
            assert np.allclose(b.w_R(2 * r), 2.0 ** -d * a.w_R(r), rtol=1e-8, atol=0)

    @pytest.mark.parametrize("dimension,sup_slope", [(3, -5.0), (2, -4.0)])
    def test_slopes(self, dimension, sup_slope):
        fit = fit_w_scalings(dimension, 1.0, np.geomspace(10, 100, 5))
        assert fit["sup_slope"] == pytest.approx(sup_slope, abs=0.1)
        assert fit["int_slope"] == pytest.approx(-2.0, abs=0.1)


class TestConfigurations:
    def test_I_R_examples(self):
        assert nearest_neighbor_count_I_R(np.zeros((0, 3)), 1.0) == 0
        assert nearest_neighbor_count_I_R([[0, 0, 0]], 1.0) == 0
        assert nearest_neighbor_count_I_R([[0, 0, 0], [1.5, 0, 0]], 1.0) == 2
        assert nearest_neighbor_count_I_R([[0, 0, 0], [2.5, 0, 0]], 1.0) == 0
        assert nearest_neighbor_count_I_R([[0, 0, 0], [1, 0, 0], [10, 0, 0]], 1.0) == 2

    def test_I_R_tree_matches_brute(self):
        rng = np.random.default_rng(11)
        for d in (2, 3):
            pts = rng.random((100, d)) * 12
            assert (nearest_neighbor_count_I_R(pts, 0.4, "tree")
                    == nearest_neighbor_count_I_R(pts, 0.4, "brute"))

    def test_W_Y_empty(self, kit3):
        field = soft_field_W_Y(np.zeros((0, 3)), kit3, 0.3)
        assert field.dropped == 0
        assert np.all(field(np.zeros((4, 3))) == 0.0)

    def test_W_Y_drops_close_pairs(self, kit3):
        Y = [[0, 0, 0], [1.0, 0, 0], [20, 0, 0]]
        field = soft_field_W_Y(Y, kit3, 0.3)
        assert field.dropped == 2
        assert len(field.centres) == 1

    def test_W_Y_eps_range(self, kit3):
        with pytest.raises(ValueError):
            soft_field_W_Y([[0, 0, 0]], kit3, 1.0)

    def test_lattice_sum_sup_single_point(self, kit2):
        val = lattice_sum_sup([[0.0, 0.0]], kit2.w_R, kit2.s / 4)
        assert val == pytest.approx(kit2.w_R.sup(), rel=1e-3)

    @pytest.mark.slow
    @pytest.mark.parametrize("dimension", [2, 3])
    def test_lattice_constant_stable(self, dimension):
        kit = build_kit(dimension, 4.0, 1.0, 0.5, 0.5)
        c10 = lattice_sum_constant(kit, 10)
        c100 = lattice_sum_constant(kit, 100)
        assert abs(c100 / c10 - 1) <= 0.2
