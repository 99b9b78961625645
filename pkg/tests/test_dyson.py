import math

import numpy as np
import pytest

from fermigas.dyson import (
    BASE_RESOLUTION,
    CoreFactor,
    CoreSupportError,
    GaussianTerm,
    TestFunction,
    ball_rule,
    core_ramp,
    core_ramp_slope,
    dyson_field_gaps,
    dyson_gap,
    dyson_gaps,
    gap_corpus,
    monomial_sphere_integral,
    radial_rule,
    sphere_average,
    sphere_first_moment,
    sphere_rule,
)
from fermigas.potentials import RadialPotential
from fermigas.soft_potential import build_kit, kit_for_potential

TestFunction.__test__ = False


def fixed_psi(dimension, cores=()):
    terms = (GaussianTerm(0.8, 0.05, (0.3,) * dimension, (0.2,) + (0.0,) * (dimension - 1), 0.4),
             GaussianTerm(-0.5, 0.12, (-0.5,) + (0.1,) * (dimension - 1), (0.0,) * dimension, 1.1))
    return TestFunction(dimension, terms, cores)


def grid_integral(f, dimension, half=22.0, n=141):
    axis = np.linspace(-half, half, n)
    h = axis[1] - axis[0]
    pts = np.stack(np.meshgrid(*[axis] * dimension, indexing="ij"), -1).reshape(-1, dimension)
    return float(np.sum(f(pts)) * h**dimension)


@pytest.mark.parametrize("dimension", [2, 3])
class TestSphereAverages:
    def test_average_matches_rule(self, dimension):
        dirs, w = sphere_rule(dimension, 24, 48)
        for B in (np.array([0.3, -1.2, 0.5]) + 1j * np.array([0.7, 0.1, -0.4]),
                  np.array([2.0, 0.0, 1.0]) + 0j):
            B = B[:dimension]
            r = 1.3
            direct = np.sum(w * np.exp(r * dirs @ B))
            u = r * np.sqrt(np.sum(B * B))
            assert sphere_average(dimension, u, 0.0) == pytest.approx(direct, rel=1e-11)

    def test_first_moment_matches_rule(self, dimension):
        dirs, w = sphere_rule(dimension, 24, 48)
        B = (np.array([0.4, 0.9, -0.3]) + 1j * np.array([-0.2, 0.5, 0.8]))[:dimension]
        for r in (1e-4, 0.3, 2.0):
            direct = (w[:, None] * dirs * np.exp(r * dirs @ B)[:, None]).sum(axis=0)
            u = np.array([r * np.sqrt(np.sum(B * B))])
            Q = sphere_first_moment(dimension, r, u, 0.0)[0]
            assert np.allclose(Q * B, direct, rtol=1e-10, atol=1e-14)

    def test_sphere_rule_area(self, dimension):
        _, w = sphere_rule(dimension, 6, 12)
        area = 2 * math.pi if dimension == 2 else 4 * math.pi
        assert w.sum() == pytest.approx(area, rel=1e-13)


def test_monomial_sphere_integral():
    dirs, w = sphere_rule(3, 20, 40)
    for gamma in ((0, 0, 0), (2, 0, 0), (2, 2, 0), (4, 0, 2), (1, 1, 0)):
        direct = np.sum(w * np.prod(dirs ** np.array(gamma), axis=1))
        assert monomial_sphere_integral(gamma) == pytest.approx(direct, abs=1e-12)


def test_radial_rule_exact_for_polynomials():
    r, w = radial_rule([0.0, 0.4, 1.5], 6)
    assert np.sum(w * r**5) == pytest.approx(1.5**6 / 6, rel=1e-13)


def test_ball_rule_volume():
    pts, w, r = ball_rule(np.zeros(3), [0.0, 2.0], 8, 3, 8, 16)
    assert np.allclose(np.linalg.norm(pts, axis=1), r)
    assert w.sum() == pytest.approx(4 / 3 * math.pi * 8, rel=1e-12)


class TestRamp:
    def test_endpoints(self):
        assert core_ramp(0.0) == 0.0 and core_ramp(1.0) == 1.0
        assert core_ramp(-3.0) == 0.0 and core_ramp(4.0) == 1.0

    def test_slope_matches_difference(self):
        t = np.linspace(0.05, 0.95, 19)
        h = 1e-6
        fd = (core_ramp(t + h) - core_ramp(t - h)) / (2 * h)
        assert np.allclose(core_ramp_slope(t), fd, atol=1e-7)


@pytest.mark.parametrize("dimension", [2, 3])
class TestTestFunction:
    def test_gaussian_norm_matches_grid(self, dimension):
        psi = fixed_psi(dimension)
        ref = grid_integral(lambda x: psi.gaussian(x) ** 2, dimension)
        assert psi.gaussian_norm2() == pytest.approx(ref, rel=1e-8)

    def test_gaussian_kinetic_matches_grid(self, dimension):
        psi = fixed_psi(dimension)
        ref = grid_integral(lambda x: np.sum(psi.gaussian_grad(x) ** 2, axis=-1), dimension)
        assert psi.gaussian_kinetic() == pytest.approx(ref, rel=1e-8)

    def test_gradient_matches_difference(self, dimension):
        core = CoreFactor((0.0,) * dimension, 0.5, 0.4)
        psi = fixed_psi(dimension, (core,))
        x = np.array([[0.7, -0.3, 0.2][:dimension], [2.0, 1.0, -1.0][:dimension]])
        h = 1e-6
        for j in range(dimension):
            e = np.zeros(dimension)
            e[j] = h
            fd = (psi(x + e) - psi(x - e)) / (2 * h)
            assert np.allclose(psi.grad(x)[:, j], fd, atol=1e-7)

    def test_vanishes_on_core(self, dimension):
        core = CoreFactor((0.0,) * dimension, 0.5, 0.4)
        psi = fixed_psi(dimension, (core,))
        rng = np.random.default_rng(0)
        x = rng.normal(size=(50, dimension))
        x *= (0.5 * rng.random(50) / np.linalg.norm(x, axis=1))[:, None]
        assert np.all(psi(x) == 0.0)

    def test_parseval(self, dimension):
        psi = fixed_psi(dimension)
        p, w = radial_rule(np.linspace(0, 14, 8), 24)
        assert psi.band_norm2(p, w * p ** (dimension - 1)) == pytest.approx(psi.gaussian_norm2(),
                                                                            rel=1e-10)

    def test_radial_moment_matches_rule(self, dimension):
        psi = fixed_psi(dimension)
        centre = np.array([0.2, -0.1, 0.3][:dimension])
        r = np.array([0.4, 1.1, 2.5])
        wts = np.array([1.0, 0.5, 2.0])
        dirs, wd = sphere_rule(dimension, 24, 48)
        direct = sum(wi * np.sum(wd * psi.gaussian(centre + ri * dirs) ** 2) for ri, wi in zip(r, wts))
        assert psi.radial_moment(centre, r, wts) == pytest.approx(direct, rel=1e-10)


@pytest.fixture(scope="module")
def sphere_kit():
    pot = RadialPotential.hard_sphere(0.5)
    return pot, kit_for_potential(pot, 3, 4.0, 1.0)


class TestGap:
    def test_no_interaction_gap_nonnegative(self):
        pot = RadialPotential.zero(0.5)
        kit = build_kit(3, 4.0, 1.0, 0.0, 0.5)
        for seed in range(3):
            psi = TestFunction.random(np.random.default_rng(seed), 3, kit.s)
            g = dyson_gap(psi, pot, kit, 0.5)
            assert g.gap >= -g.eta
            assert g.rhs == pytest.approx(0.0, abs=1e-14)

    def test_missing_core_rejected(self, sphere_kit):
        pot, kit = sphere_kit
        with pytest.raises(CoreSupportError):
            dyson_gap(fixed_psi(3), pot, kit, 0.3)

    def test_eps_and_dimension_validated(self, sphere_kit):
        pot, kit = sphere_kit
        psi = fixed_psi(3, (CoreFactor((0.0,) * 3, 0.5, 0.25),))
        with pytest.raises(ValueError):
            dyson_gap(psi, pot, kit, 0.0)
        with pytest.raises(ValueError):
            dyson_gap(fixed_psi(2), pot, kit, 0.3)

    def test_eta_small_against_scale(self, sphere_kit):
        pot, kit = sphere_kit
        psi = fixed_psi(3, (CoreFactor((0.0,) * 3, 0.5, 0.25),))
        gaps = dyson_gaps(psi, pot, kit, [0.1, 0.5])
        for g in gaps:
            assert g.eta < 1e-3 * g.scale
            assert g.holds

    def test_resolution_scaling(self):
        up = BASE_RESOLUTION.scaled(1.5)
        assert up.n_radial == math.ceil(BASE_RESOLUTION.n_radial * 1.5)

    @pytest.mark.parametrize("dimension,potential", [
        (3, RadialPotential.hard_sphere(0.5)),
        (3, RadialPotential.square_barrier(10.0, 0.5)),
        (2, RadialPotential.hard_sphere(0.5)),
        (2, RadialPotential.square_barrier(10.0, 0.5)),
    ])
    def test_small_corpus_holds(self, dimension, potential):
        kit = kit_for_potential(potential, dimension, 4.0, 1.0)
        gaps = gap_corpus(potential, kit, 4, seed=7)
        assert all(g.holds for g in gaps)

    def test_field_corpus_holds(self, sphere_kit):
        pot, kit = sphere_kit
        gaps = gap_corpus(pot, kit, 2, seed=3, field_centres=3)
        assert all(g.holds for g in gaps)

    def test_field_centres_must_be_separated(self, sphere_kit):
        pot, kit = sphere_kit
        centres = np.array([[0.0, 0, 0], [1.0, 0, 0]])
        cores = tuple(CoreFactor(tuple(c), 0.5, 0.25) for c in centres)
        with pytest.raises(ValueError):
            dyson_field_gaps(fixed_psi(3, cores), pot, kit, centres, [0.3])

    def test_corpus_deterministic(self, sphere_kit):
        pot, kit = sphere_kit
        a = [g.gap for g in gap_corpus(pot, kit, 2, seed=5)]
        b = [g.gap for g in gap_corpus(pot, kit, 2, seed=5)]
        assert a == b
