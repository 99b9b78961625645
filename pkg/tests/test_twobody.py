import math

import numpy as np
import pytest
from scipy.integrate import quad

from fermigas.potentials import RadialPotential, smooth_bump, triangle
from fermigas.twobody import (
    BasisNotConverged,
    TwoBodyProblem,
    axis_correlation,
    axis_pairs,
    basis_size,
    free_energy,
    ground_state_energy,
    interaction_matrix,
    mode_density_square,
    pseudopotential_prediction,
)


def phi(k, x, ell):
    return math.sqrt(2 / ell) * math.sin(k * math.pi * x / ell)


class TestBasis:
    def test_pairs_keep_even_parity(self):
        pairs = axis_pairs(4)
        assert len(pairs) == 8
        assert np.all((pairs.sum(axis=1) % 2) == 0)

    def test_basis_size(self):
        assert basis_size(3, 3) == 5**3
        assert basis_size(3, 2) == 25

    def test_correlation_matches_quadrature(self):
        ell = 1.3
        pairs = axis_pairs(3)
        r = np.array([-0.4, 0.0, 0.25])
        C = axis_correlation(pairs, r, ell)
        for n, rn in enumerate(r):
            for p in (0, 2, 4):
                for q in (1, 3):
                    k1, k2 = pairs[p]
                    k3, k4 = pairs[q]
                    lo, hi = max(0.0, rn), min(ell, ell + rn)
                    f = lambda x: phi(k1, x, ell) * phi(k3, x, ell) * phi(k2, x - rn, ell) * phi(k4, x - rn, ell)
                    assert C[n, p, q] == pytest.approx(quad(f, lo, hi, epsabs=1e-14)[0], abs=1e-12)


class TestProblem:
    def test_hard_core_rejected(self):
        with pytest.raises(ValueError):
            TwoBodyProblem(RadialPotential.hard_sphere(0.1), 1.0, 3)

    def test_cutoff_and_range_validated(self):
        pot = RadialPotential.square_barrier(1.0, 0.1)
        with pytest.raises(ValueError):
            TwoBodyProblem(pot, 1.0, 1)
        with pytest.raises(ValueError):
            TwoBodyProblem(pot, 0.05, 3)
        with pytest.raises(ValueError):
            TwoBodyProblem(pot, 1.0, 40)


@pytest.mark.parametrize("dimension", [2, 3])
def test_free_particles_exact(dimension):
    res = ground_state_energy(TwoBodyProblem(RadialPotential.zero(0.1), 1.7, 4, dimension))
    assert res.energy == pytest.approx(free_energy(1.7, dimension), rel=1e-13)
    assert all(e == pytest.approx(res.free_energy, rel=1e-13) for e in res.trace)


@pytest.mark.parametrize("dimension", [2, 3])
def test_trace_monotone_and_shift_positive(dimension):
    prob = TwoBodyProblem(RadialPotential.square_barrier(50.0, 0.1), 1.0, 5, dimension)
    res = ground_state_energy(prob)
    assert res.cutoffs == [2, 3, 4, 5]
    assert all(b <= a + 1e-12 * abs(a) for a, b in zip(res.trace, res.trace[1:]))
    assert res.shift > 0
    assert res.to_dict()["shift"] == res.shift


def test_matrix_symmetric_and_thread_independent():
    prob = TwoBodyProblem(triangle(30.0, 0.15), 1.0, 3)
    a = interaction_matrix(prob, threads=1, chunk=64)
    b = interaction_matrix(prob, threads=3, chunk=64)
    assert np.array_equal(a, b)
    assert np.array_equal(a, a.T)


def test_first_order_shift_matches_diagonal_element():
    """The lowest diagonal element is the first-order shift of the free state."""
    v0, R0, ell = 2.0, 0.2, 1.0
    h = interaction_matrix(TwoBodyProblem(RadialPotential.square_barrier(v0, R0), ell, 2))
    xg, wg = np.polynomial.legendre.leggauss(64)

    def autocorrelation(r):
        lo, hi = np.maximum(0.0, r), np.minimum(ell, ell + r)
        x = 0.5 * (hi - lo)[:, None] * xg + 0.5 * (hi + lo)[:, None]
        f = (2 / ell) ** 2 * np.sin(math.pi * x / ell) ** 2 * np.sin(math.pi * (x - r[:, None]) / ell) ** 2
        return 0.5 * (hi - lo) * (f @ wg)

    rg, rw = np.polynomial.legendre.leggauss(24)
    rg, rw = 0.5 * R0 * (rg + 1), 0.5 * R0 * rw
    cg, cw = np.polynomial.legendre.leggauss(24)
    pg = (np.arange(48) + 0.5) * 2 * math.pi / 48
    R, C, P = np.meshgrid(rg, cg, pg, indexing="ij")
    W = np.einsum("i,j,k->ijk", rw * rg**2, cw, np.full(48, 2 * math.pi / 48))
    S = np.sqrt(1 - C**2)
    x, y, z = (R * S * np.cos(P)).ravel(), (R * S * np.sin(P)).ravel(), (R * C).ravel()
    total = np.sum(W.ravel() * autocorrelation(x) * autocorrelation(y) * autocorrelation(z))
    assert h[0, 0] == pytest.approx(v0 * total, rel=1e-6)


def test_require_converged_raises():
    prob = TwoBodyProblem(RadialPotential.square_barrier(1e4, 0.2), 1.0, 3)
    with pytest.raises(BasisNotConverged):
        ground_state_energy(prob, require_converged=True)


class TestPseudopotential:
    def test_zero_a(self):
        assert pseudopotential_prediction(0.0, 2.0) == free_energy(2.0)

    def test_density_square(self):
        assert mode_density_square(2.0) == pytest.approx(27 / (8 * 2.0**3))

    def test_shift_scaling(self):
        a = 1e-3
        s1 = pseudopotential_prediction(a, 1.0) - free_energy(1.0)
        s2 = pseudopotential_prediction(a, 2.0) - free_energy(2.0)
        assert s1 / s2 == pytest.approx(8.0)
        assert s1 == pytest.approx(27 * math.pi * a)

    def test_negative_a(self):
        with pytest.raises(ValueError):
            pseudopotential_prediction(-1.0, 1.0)

    def test_2d_heuristic(self):
        assert pseudopotential_prediction(1e-3, 1.0, 2) > free_energy(1.0, 2)


@pytest.mark.slow
def test_universality_of_shift():
    from scipy.optimize import brentq

    from fermigas.scattering import solve_zero_energy

    a = 1e-3
    shapes = [(lambda h: RadialPotential.square_barrier(h, 0.05), 0.05),
              (lambda h: triangle(h, 0.06), 0.06),
              (lambda h: smooth_bump(h, 0.07), 0.07)]
    for make, _ in shapes:
        h = brentq(lambda v: solve_zero_energy(make(v), 3).a - a, 1e-3, 1e4, xtol=1e-12, rtol=1e-12)
        res = ground_state_energy(TwoBodyProblem(make(h), 1.0, 5))
        assert res.shift / (math.pi * a) == pytest.approx(27, rel=0.1)
