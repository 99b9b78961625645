import math

import mpmath
import numpy as np
import pytest

from fermigas.bounds import (
    GasState,
    balanced_minimum,
    box_bound_at,
    coupling_grid,
    fit_log_power,
    fit_power,
    fit_sweep,
    leading_energy,
    leading_parts,
    log_coupling,
    lower_bound_schedule,
    schedule_at_coupling,
    sweep,
    upper_bound_box,
    upper_bound_schedule,
)
from fermigas.constants import BoundConstants


class TestLeading:
    def test_high_precision_3d(self):
        mpmath.mp.dps = 40
        kin = mpmath.mpf(3) / 5 * (6 * mpmath.pi**2) ** (mpmath.mpf(2) / 3)
        half = mpmath.mpf(1) / 2
        ref = kin * 2 * half ** (mpmath.mpf(5) / 3) + 8 * mpmath.pi * mpmath.mpf("0.01") * half * half
        val = leading_energy(GasState.uniform(3, (0.5, 0.5), 0.01))
        assert val == pytest.approx(float(ref), rel=1e-12)

    def test_high_precision_2d(self):
        mpmath.mp.dps = 40
        rho1, rho2, a = mpmath.mpf("0.3"), mpmath.mpf("0.2"), mpmath.mpf("0.01")
        L = abs(mpmath.log((rho1 + rho2) * a * a))
        ref = 2 * mpmath.pi * (rho1**2 + rho2**2) + 8 * mpmath.pi / L * rho1 * rho2
        val = leading_energy(GasState.uniform(2, (0.3, 0.2), 0.01))
        assert val == pytest.approx(float(ref), rel=1e-12)

    def test_no_interaction_without_a(self):
        kin, inter = leading_parts(GasState.uniform(3, (0.4, 0.6), 0.0))
        assert inter == 0.0 and kin > 0

    def test_single_species(self):
        _, inter = leading_parts(GasState.uniform(3, (1.0, 0.0), 0.5))
        assert inter == 0.0

    def test_three_species(self):
        st = GasState.uniform(3, (0.1, 0.2, 0.3), 0.01)
        kin, inter = leading_parts(st)
        assert inter == pytest.approx(8 * math.pi * 0.01 * (0.02 + 0.03 + 0.06))

    def test_2d_log_rejected(self):
        with pytest.raises(ValueError):
            leading_energy(GasState.uniform(2, (0.5, 0.5), 2.0))
        with pytest.raises(ValueError):
            log_coupling(1.0, 0.0)

    @pytest.mark.parametrize("bad", [
        dict(dimension=4, densities=(1.0,), scattering=((0.0,),)),
        dict(dimension=3, densities=(-1.0,), scattering=((0.0,),)),
        dict(dimension=3, densities=(1.0, 1.0), scattering=((0.0, 1.0), (0.5, 0.0))),
        dict(dimension=3, densities=(1.0, 1.0), scattering=((0.0,),)),
    ])
    def test_invalid_state(self, bad):
        with pytest.raises(ValueError):
            GasState(**bad)


class TestBalanced:
    def test_a_zero(self):
        r1, r2 = balanced_minimum(1.0, 0.0)
        assert r1 == pytest.approx(0.5, abs=1e-6)

    @pytest.mark.parametrize("dimension", [2, 3])
    def test_small_coupling(self, dimension):
        r1, r2 = balanced_minimum(1.0, 1e-3, dimension)
        assert r1 == pytest.approx(0.5, abs=1e-6) and r1 + r2 == pytest.approx(1.0)

    def test_large_coupling_reports(self):
        r1, r2 = balanced_minimum(1.0, 10.0)
        assert 0 <= r1 <= r2 and r1 + r2 == pytest.approx(1.0)


class TestBox:
    def test_no_interaction(self):
        rep = upper_bound_box(5, 5, 10.0, 1.0, 2.0, 0.0, 0.5)
        nonzero = {k for k, v in rep.channels.items() if v != 0}
        assert nonzero == {"finite_size"}
        assert rep.interaction == 0.0

    def test_optimal_eps_against_grid(self):
        args = (2000, 2000, 400.0, 1.0, 2.0, 1e-3, 1e-3)
        best = upper_bound_box(*args).total
        grid = np.geomspace(1e-4, 10, 4001)
        grid_best = min(box_bound_at(*args, e) for e in grid)
        assert best <= grid_best * (1 + 1e-12)
        assert best == pytest.approx(grid_best, rel=1e-2)

    def test_closed_form_gradient(self):
        rep = upper_bound_box(2000, 2000, 400.0, 1.0, 2.0, 1e-3, 1e-3)
        combined = rep.channels["schwarz"] + rep.channels["jastrow_gradient"]
        assert combined == pytest.approx(rep.extras["closed_form_gradient"], rel=1e-12)

    def test_infeasible_has_no_bound(self):
        rep = upper_bound_box(2, 2, 2.0, 1.0, 1.0, 0.5, 0.5)
        assert not rep.feasible and rep.bound is None
        assert any("2R" in r for r in rep.reasons)

    def test_channels_nonnegative(self):
        rep = upper_bound_box(2000, 2000, 400.0, 1.0, 2.0, 1e-3, 1e-3)
        assert all(v >= 0 for v in rep.channels.values())
        assert rep.total == pytest.approx(rep.kinetic + rep.interaction + sum(rep.channels.values()))


class TestSchedules:
    @pytest.mark.parametrize("x", [1e-3, 1e-4])
    def test_moderate_coupling_infeasible_at_unit_constants(self, x):
        up = schedule_at_coupling("upper", 3, x)
        assert not up.feasible and up.bound is None and up.reasons

    @pytest.mark.parametrize("dimension,coupling", [(3, 1e-40), (2, 1e20)])
    def test_sandwich(self, dimension, coupling):
        up = schedule_at_coupling("upper", dimension, coupling)
        lo = schedule_at_coupling("lower", dimension, coupling)
        assert up.feasible and lo.feasible
        assert lo.total <= up.leading <= up.total
        assert lo.error >= 0 and up.error >= 0

    def test_hard_sphere_channels_itemised(self):
        rep = upper_bound_schedule(0.5e-120, 0.5e-120, 1e-2, 1e-2)
        assert rep.feasible
        assert {"finite_size", "norm_loss", "jastrow_gradient", "packing"} <= set(rep.channels)
        assert rep.within_rate

    def test_scale_covariance(self):
        lam = 7.0
        for fn in (upper_bound_schedule, lower_bound_schedule):
            a = fn(0.5e-120, 0.5e-120, 1e-2, 1e-2)
            b = fn(0.5e-120 / lam**3, 0.5e-120 / lam**3, lam * 1e-2, lam * 1e-2)
            assert b.total == pytest.approx(a.total * lam**-5, rel=1e-12)

    def test_error_vanishes_with_coupling(self):
        errs = [schedule_at_coupling(k, 3, x).eps_rho for k in ("upper", "lower")
                for x in (1e-30, 1e-60)]
        assert errs[1] < errs[0] and errs[3] < errs[2]

    def test_channel_constants_monotone(self):
        base = BoundConstants()
        big = BoundConstants(norm_loss=2.0, soft_remainder=2.0)
        for kind, sign in (("upper", 1), ("lower", -1)):
            a = schedule_at_coupling(kind, 3, 1e-40, constants=base).total
            b = schedule_at_coupling(kind, 3, 1e-40, constants=big).total
            assert sign * (b - a) >= 0

    def test_removing_channel_tightens(self):
        up = schedule_at_coupling("upper", 3, 1e-40)
        lo = schedule_at_coupling("lower", 3, 1e-40)
        for name, v in up.channels.items():
            assert v >= 0 and up.total - v <= up.total
        for name, v in lo.channels.items():
            assert v >= 0 and lo.total + v >= lo.total

    def test_2d_interaction_ratio(self):
        """Interaction over its leading value is 1 + 2 alpha ln L / L asymptotically."""
        for L in (1e4, 1e8, 1e16):
            rep = schedule_at_coupling("upper", 2, L)
            lead = 8 * math.pi / L * 0.25
            assert rep.interaction == pytest.approx(lead, rel=1e-14)
            excess = rep.channels["log_coupling"] / lead
            assert excess * L / math.log(L) == pytest.approx(2 * rep_alpha(), rel=1e-2)

    def test_a_zero_rejected(self):
        with pytest.raises(ValueError):
            upper_bound_schedule(0.5, 0.5, 0.0, 0.0)


def rep_alpha():
    return BoundConstants().alpha_2d


class TestFits:
    def test_fit_power_exact(self):
        x = np.geomspace(1, 100, 5)
        assert fit_power(x, 3 * x**0.7)[0] == pytest.approx(0.7)

    def test_fit_log_power_exact(self):
        L = np.geomspace(1e3, 1e9, 7)
        out = fit_log_power(L, 2 * np.log(L) / L)
        assert out["p"] == pytest.approx(-1) and out["q"] == pytest.approx(1)

    def test_coupling_grid(self):
        with pytest.raises(ValueError):
            coupling_grid(1.0, 0.5, 3)
        assert len(coupling_grid(1e-5, 1e-3, 3)) == 3

    def test_3d_exponents(self):
        fit = fit_sweep(3, sweep(3, coupling_grid(1e-50, 1e-30, 9)))
        assert fit["upper_slope"] == pytest.approx(2 / 9, abs=0.02)
        assert fit["lower_slope"] == pytest.approx(1 / 13, abs=0.01)

    def test_2d_exponents(self):
        fit = fit_sweep(2, sweep(2, coupling_grid(1e16, 1e24, 9)))
        assert fit["upper_fit"]["p"] == pytest.approx(-1, abs=0.05)
        assert fit["upper_fit"]["q"] > 0.5
        assert fit["lower_slope"] == pytest.approx(-0.1, abs=0.01)
