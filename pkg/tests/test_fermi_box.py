import itertools
import math
import time

import numpy as np
import pytest

from fermigas.fermi_box import (KINETIC_3D, FermiSeaSpec, GammaFilter, box_quadrature,
                                density_square_integral, density_square_quadrature,
                                dirichlet_energy_coefficient, dirichlet_energy_sum,
                                enumerate_modes, estimate_finite_size_exponent,
                                fermi_leading_term, leading_kinetic, low_momentum_bound,
                                one_particle_density, two_particle_density)


def brute_energy(n, dimension):
    levels = sorted(sum(k * k for k in ks) for ks in itertools.product(range(1, 9), repeat=dimension))
    return sum(levels[:n])


@pytest.mark.parametrize("dimension", [2, 3])
def test_energy_matches_hand_enumeration(dimension):
    for n in range(1, 21):
        assert dirichlet_energy_coefficient(n, dimension) == brute_energy(n, dimension)


def test_energy_examples():
    assert dirichlet_energy_sum(1, 2.0) == pytest.approx(3 * math.pi**2 / 4)
    assert dirichlet_energy_coefficient(4) == 21


def test_energy_scales_as_inverse_square():
    assert dirichlet_energy_sum(50, 3.0) == pytest.approx(dirichlet_energy_sum(50, 1.0) / 9, rel=1e-14)


def test_large_n_correction_bounded():
    n = 10**5
    lead = leading_kinetic(n, 1.0)
    ratio = (dirichlet_energy_sum(n, 1.0) - lead) / (lead * n ** (-1 / 3))
    assert 0.1 <= ratio <= 10


def test_finite_size_exponent():
    start = time.perf_counter()
    slope, _ = estimate_finite_size_exponent(np.unique(np.geomspace(1e3, 1e5, 12).astype(int)))
    assert abs(slope + 1 / 3) <= 0.05
    assert time.perf_counter() - start < 60


def test_energy_guard():
    with pytest.raises(ValueError):
        dirichlet_energy_coefficient(10**7 + 1)
    with pytest.raises(ValueError):
        dirichlet_energy_coefficient(0)


def test_modes_deterministic_and_ordered():
    a, b = enumerate_modes(200), enumerate_modes(200)
    assert np.array_equal(a, b)
    sq = np.sum(a**2, axis=1)
    assert np.all(np.diff(sq) >= 0)
    assert np.all(a >= 1)
    # ties broken lexicographically
    assert enumerate_modes(4).tolist() == [[1, 1, 1], [1, 1, 2], [1, 2, 1], [2, 1, 1]]


def test_leading_term_examples():
    assert fermi_leading_term([0.0, 0.0]) == 0.0
    assert fermi_leading_term([1.0]) == pytest.approx(0.6 * (6 * math.pi**2) ** (2 / 3), rel=1e-15)
    assert fermi_leading_term([1.0]) == pytest.approx(9.11560, rel=1e-5)
    assert fermi_leading_term([1.0, 1.0], 2) == pytest.approx(4 * math.pi)
    assert KINETIC_3D == pytest.approx(0.6 * (6 * math.pi**2) ** (2 / 3))


def test_leading_term_matches_enumeration_extrapolation():
    # E^D / (n^(5/3)/l^2) -> c_3; the n^(-1/3) correction is removed by a two-point fit
    n1, n2 = 20000, 160000
    r1 = dirichlet_energy_sum(n1, 1.0) / n1 ** (5 / 3)
    r2 = dirichlet_energy_sum(n2, 1.0) / n2 ** (5 / 3)
    x1, x2 = n1 ** (-1 / 3), n2 ** (-1 / 3)
    extrapolated = r2 - (r1 - r2) / (x1 - x2) * x2
    assert extrapolated == pytest.approx(fermi_leading_term([1.0]), rel=2e-3)


def test_density_square_single_mode():
    assert density_square_integral(1, 2.0) == pytest.approx(27 / 8 / 8, rel=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_density_square_matches_quadrature(n):
    spec = FermiSeaSpec(n, 1.3)
    assert density_square_integral(n, 1.3) == pytest.approx(density_square_quadrature(spec), rel=1e-8)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_density_square_2d_matches_quadrature(n):
    spec = FermiSeaSpec(n, 0.8, 2)
    assert density_square_integral(n, 0.8, 2) == pytest.approx(density_square_quadrature(spec), rel=1e-8)


def test_density_square_excess_positive_and_decaying():
    excess = {n: density_square_integral(n, 1.0) / n**2 - 1 for n in (10, 100, 1000, 4000)}
    assert all(v > 0 for v in excess.values())
    scaled = [excess[n] * n ** (1 / 3) for n in excess]
    assert max(scaled) / min(scaled) < 3
    assert excess[4000] < excess[10]


def test_one_particle_density_boundary_and_centre():
    spec = FermiSeaSpec(1, 2.0)
    assert one_particle_density(spec, np.array([0.0, 0.7, 1.1])) == pytest.approx(0.0, abs=1e-30)
    assert one_particle_density(spec, np.array([1.0, 1.0, 1.0])) == pytest.approx(1.0)


def test_one_particle_density_integrates_to_n():
    spec = FermiSeaSpec(7, 1.5)
    pts, wts = box_quadrature(1.5, 3, 20)
    assert np.sum(wts * one_particle_density(spec, pts)) == pytest.approx(7, rel=1e-8)


def test_point_outside_box_rejected():
    with pytest.raises(ValueError):
        one_particle_density(FermiSeaSpec(3, 1.0), np.array([1.2, 0.5, 0.5]))


def test_two_particle_density_diagonal_zero():
    spec = FermiSeaSpec(10, 1.0)
    x = np.array([0.3, 0.4, 0.55])
    assert two_particle_density(spec, x, x) == pytest.approx(0.0, abs=1e-10)


def test_two_particle_density_small_case():
    spec = FermiSeaSpec(2, 1.0)
    x, y = np.array([0.2, 0.5, 0.6]), np.array([0.7, 0.1, 0.4])
    phi = spec.orbitals(np.stack([x, y]))
    slater = (phi[0, 0] * phi[1, 1] - phi[0, 1] * phi[1, 0]) ** 2
    assert two_particle_density(spec, x, y) == pytest.approx(slater, rel=1e-12)


def test_two_particle_density_quadratic_vanishing():
    rng = np.random.default_rng(3)
    worst = {}
    for n in (10, 50, 200):
        spec = FermiSeaSpec(n, 1.0)
        ratios = []
        for _ in range(20):
            x = rng.uniform(0.1, 0.9, 3)
            delta = rng.normal(size=3)
            delta *= 1e-3 / np.linalg.norm(delta)
            rho2 = two_particle_density(spec, x, x + delta)
            ratios.append(rho2 / (1e-6 * n ** (8 / 3)))
        assert min(ratios) >= -1e-6
        worst[n] = max(ratios)
    # one constant serves every n
    assert max(worst.values()) < 100
    assert worst[200] < 10 * worst[10]


def test_gamma_filter():
    g = GammaFilter(1.0)
    assert g(2.0) == pytest.approx(0.75)
    assert g(0.5) == 0.0
    assert g(0.0) == 0.0
    assert 0 <= g(10.0) <= 1


def test_low_momentum_bound_bathtub():
    rep = low_momentum_bound(100.0, 1.0, 10.0)
    assert rep.closed_form == pytest.approx(KINETIC_3D * 100 ** (5 / 3) / 100)
    assert rep.relative_error < 1e-4
    assert rep.minimizer_is_ball
    assert rep.filled_radius == pytest.approx(rep.expected_radius, rel=1e-3)


def test_low_momentum_bound_rejects_excess_density():
    with pytest.raises(ValueError):
        low_momentum_bound(2000.0, 1.0, 10.0)
