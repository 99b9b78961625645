"""Leading-order energy densities and the explicit upper/lower bound chains.

Energies are densities (energy per unit volume) in units hbar^2/2m = 1.  The
schedules are evaluated internally in units where the total density is one,
which keeps extreme sweeps free of overflow: in 3D everything depends on
``x = a rho^(1/3)`` and ``R0 rho^(1/3)``; in 2D on ``L = |ln(a^2 rho)|`` and
``R0 / a``.  Physical energy densities are recovered by the exact scaling
``rho^(5/3)`` (3D) or ``rho^2`` (2D).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .constants import DEFAULT_CONSTANTS, BoundConstants
from .fermi_box import KINETIC_2D, KINETIC_3D

# ---------------------------------------------------------------------------
# gas state and leading order


@dataclass(frozen=True)
class GasState:
    """Species densities, pairwise scattering lengths and the potential range."""

    dimension: int
    densities: tuple
    scattering: tuple
    R0: float = 0.0

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        rho = np.asarray(self.densities, dtype=float)
        if rho.ndim != 1 or rho.size == 0:
            raise ValueError("densities must be a non-empty sequence")
        if np.any(rho < 0) or not np.all(np.isfinite(rho)):
            raise ValueError("densities must be finite and non-negative")
        a = np.asarray(self.scattering, dtype=float)
        if a.shape != (rho.size, rho.size):
            raise ValueError("scattering must be a q x q matrix")
        if np.any(a < 0) or not np.allclose(a, a.T, rtol=0, atol=0):
            raise ValueError("scattering lengths must be non-negative and symmetric")
        if self.R0 < 0:
            raise ValueError("R0 must be non-negative")

    @classmethod
    def uniform(cls, dimension: int, densities, a: float, R0: float = 0.0) -> "GasState":
        q = len(densities)
        return cls(dimension, tuple(float(r) for r in densities),
                   tuple(tuple(float(a) for _ in range(q)) for _ in range(q)), float(R0))

    @property
    def rho(self) -> float:
        return float(sum(self.densities))


def leading_parts(state: GasState) -> tuple[float, float]:
    """(kinetic, interaction) parts of the leading-order energy density."""
    rho = np.asarray(state.densities, dtype=float)
    a = np.asarray(state.scattering, dtype=float)
    total = float(rho.sum())
    if state.dimension == 3:
        kinetic = KINETIC_3D * float(np.sum(rho ** (5.0 / 3.0)))
    else:
        kinetic = KINETIC_2D * float(np.sum(rho**2))
    interaction = 0.0
    q = rho.size
    for i in range(q):
        for j in range(i + 1, q):
            pair = rho[i] * rho[j]
            if pair == 0.0 or a[i, j] == 0.0:
                continue
            if state.dimension == 3:
                interaction += 8.0 * math.pi * a[i, j] * pair
            else:
                interaction += 8.0 * math.pi / log_coupling(total, a[i, j]) * pair
    return kinetic, interaction


def log_coupling(rho: float, a: float) -> float:
    """|ln(rho a^2)|; rejects rho a^2 >= 1 where the 2D expansion has no meaning."""
    if a <= 0 or rho <= 0:
        raise ValueError("log coupling needs rho > 0 and a > 0")
    value = math.log(rho) + 2.0 * math.log(a)
    if value >= 0:
        raise ValueError(f"2D leading order requires rho a^2 < 1 (got {math.exp(value):.3g})")
    return -value


def leading_energy(state: GasState) -> float:
    """Kinetic plus pairwise interaction energy density at leading order."""
    kinetic, interaction = leading_parts(state)
    return kinetic + interaction


def _spin_half(dimension: int, rho1: float, rho2: float, a: float, R0: float = 0.0) -> GasState:
    return GasState.uniform(dimension, (rho1, rho2), a, R0)


def balanced_minimum(rho: float, a: float, dimension: int = 3, grid: int = 2001) -> tuple[float, float]:
    """Minimiser of the two-species leading energy at fixed total density.

    A grid scan over the split locates the basin, then a bounded scalar
    minimisation refines it.  The energy is symmetric under exchange, so the
    returned split has ``rho1 <= rho2``.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")

    def energy(t):
        return leading_energy(_spin_half(dimension, t * rho, (1.0 - t) * rho, a))

    ts = np.linspace(0.0, 0.5, grid)
    values = np.array([energy(t) for t in ts])
    k = int(np.argmin(values))
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, grid - 1)]
    res = minimize_scalar(energy, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13})
    t = float(res.x) if res.fun <= values[k] else float(ts[k])
    return t * rho, (1.0 - t) * rho


# ---------------------------------------------------------------------------
# reports


@dataclass
class BoundReport:
    """Itemised bound on the energy density (or box energy for ``upper_bound_box``).

    ``channels`` holds non-negative error contributions; they are added for an
    upper bound and subtracted for a lower bound.  ``brackets`` holds the
    dimensionless small parameters that decide feasibility.
    """

    dimension: int
    kind: str
    kinetic: float
    interaction: float
    channels: dict
    brackets: dict
    schedule: dict
    feasible: bool
    reasons: list = field(default_factory=list)
    leading: float | None = None
    eps_rho: float | None = None
    rate: float | None = None
    rate_constant: float | None = None
    extras: dict = field(default_factory=dict)
    excess: float = 0.0  # (kinetic + interaction) - leading, evaluated without cancellation

    @property
    def sign(self) -> int:
        return 1 if self.kind.startswith("upper") else -1

    @property
    def total(self) -> float:
        # leading +- error keeps the ordering against leading exact in floating point
        if self.leading is not None:
            return self.leading + self.sign * self.error
        return self.kinetic + self.interaction + self.sign * sum(self.channels.values())

    @property
    def error(self) -> float:
        """|bound - leading| assembled from exact differences."""
        return self.sign * self.excess + sum(self.channels.values())

    @property
    def bound(self) -> float | None:
        """The asserted bound, or None when the schedule is infeasible."""
        return self.total if self.feasible else None

    @property
    def within_rate(self) -> bool | None:
        if self.eps_rho is None or self.rate is None or self.rate_constant is None:
            return None
        return bool(self.eps_rho <= self.rate_constant * self.rate)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension, "kind": self.kind, "kinetic": self.kinetic,
            "interaction": self.interaction, "channels": dict(self.channels),
            "brackets": dict(self.brackets), "schedule": dict(self.schedule),
            "feasible": self.feasible, "reasons": list(self.reasons), "total": self.total,
            "leading": self.leading, "eps_rho": self.eps_rho, "rate": self.rate,
            "rate_constant": self.rate_constant, "within_rate": self.within_rate,
            "extras": dict(self.extras), "excess": self.excess, "error": self.error,
        }


def _feasibility(brackets: dict, threshold: float, reasons: list) -> bool:
    for name, value in brackets.items():
        if not value < threshold:
            reasons.append(f"{name} = {value:.3g} is not below {threshold}")
    return not reasons


# ---------------------------------------------------------------------------
# 3D upper bound: finite box


def upper_bound_box(n: int, m: int, ell: float, R: float, s: float, a: float, R0: float,
                    constants: BoundConstants = DEFAULT_CONSTANTS,
                    eps: float | None = None) -> BoundReport:
    """Box energy bound for n up and m down fermions in a Dirichlet cube of side ``ell``.

    With ``eps=None`` the Schwarz parameter takes its optimal value
    ``eps^2 = C s^3 (n + m)^(8/3) / (8 pi a n m ell^2)``, which reproduces the
    closed-form bound with the gradient term ``(n+m)^(7/3) s^(3/2) a^(1/2) / ell^4``.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    if ell <= 0 or R <= 0 or s <= 0 or a < 0 or R0 < 0:
        raise ValueError("lengths must be positive (a, R0 non-negative)")
    C = constants
    vol = ell**3
    dn, dm = n / vol, m / vol
    dsum = dn + dm
    kinetic = KINETIC_3D * vol * (dn ** (5.0 / 3.0) + dm ** (5.0 / 3.0))
    size = n ** (-1.0 / 3.0) + m ** (-1.0 / 3.0)
    base = 8.0 * math.pi * a * vol * dn * dm
    brackets = {
        "cutoff_curvature": C.cutoff_curvature * a * R**2 / s**3,
        "jastrow_overlap": C.jastrow_overlap * dsum ** (2.0 / 3.0) * s**2,
        "range_ratio": C.range_ratio * a / R,
        "interaction_size": C.interaction_size * size,
        "norm_loss": C.norm_loss * dsum ** (8.0 / 3.0) * vol * s**5,
    }
    gradient = C.jastrow_gradient * s**3 * dsum ** (8.0 / 3.0) * vol
    optimal = math.sqrt(gradient / base) if base > 0 else math.inf
    eps_used = optimal if eps is None else float(eps)
    if eps_used <= 0:
        raise ValueError("eps must be positive")
    channels = {"finite_size": kinetic * C.finite_size * size,
                "schwarz": base * eps_used if base > 0 else 0.0}
    channels.update({k: base * v for k, v in brackets.items()})
    channels["jastrow_gradient"] = gradient / eps_used if math.isfinite(eps_used) else 0.0
    check = {"finite_size": C.finite_size * size, **brackets}
    if base > 0:
        check["schwarz"] = eps_used
    reasons = []
    if s < 2 * R:
        reasons.append(f"s = {s:.3g} is below 2R = {2 * R:.3g}")
    if R <= R0:
        reasons.append(f"R = {R:.3g} does not exceed R0 = {R0:.3g}")
    feasible = _feasibility(check, C.feasibility, reasons)
    closed_gradient = math.sqrt(8 * math.pi * C.jastrow_gradient) * dsum ** (7.0 / 3.0) * vol \
        * s**1.5 * math.sqrt(a) if a > 0 else 0.0
    extras = {"optimal_eps": optimal, "eps": eps_used,
              "closed_form_gradient": closed_gradient}
    return BoundReport(3, "upper_box", kinetic, base, channels, check,
                       {"n": n, "m": m, "ell": ell, "R": R, "s": s, "eps": eps_used, "a": a,
                        "R0": R0}, feasible, reasons, extras=extras)


def box_bound_at(n, m, ell, R, s, a, R0, eps, constants: BoundConstants = DEFAULT_CONSTANTS) -> float:
    """Total of the box bound at a given Schwarz parameter."""
    return upper_bound_box(n, m, ell, R, s, a, R0, constants, eps).total


# ---------------------------------------------------------------------------
# schedules


def _fractions(rho1: float, rho2: float) -> tuple[float, float, float]:
    if rho1 <= 0 or rho2 <= 0:
        raise ValueError("both densities must be positive")
    rho = rho1 + rho2
    return rho, rho1 / rho, rho2 / rho


def _ceil_count(value: float) -> tuple[int, float]:
    count = max(1, math.ceil(value))
    return count, float(count) - value


def _scale_report(rep: BoundReport, energy: float, length: float) -> BoundReport:
    """Convert a report computed at unit density to physical units."""
    rep.kinetic *= energy
    rep.interaction *= energy
    rep.channels = {k: v * energy for k, v in rep.channels.items()}
    rep.excess *= energy
    if rep.leading is not None:
        rep.leading *= energy
    lengths = ("ell", "R", "s", "a", "R0")
    rep.schedule = {k: (v * length if k in lengths else v) for k, v in rep.schedule.items()}
    return rep


def _upper_3d_unit(f1: float, f2: float, x: float, r0: float, C: BoundConstants) -> BoundReport:
    """Upper schedule at unit total density; a = x and R0 = r0 in these units."""
    a = x
    R = a * x ** (-2.0 / 9.0)
    s = 2.0 * R
    ell = x ** (-11.0 / 9.0)
    V = (ell + r0) ** 3
    n, eps1 = _ceil_count(f1 * V)
    m, eps2 = _ceil_count(f2 * V)
    box = upper_bound_box(n, m, ell, R, s, a, r0, C)
    channels = {k: v / V for k, v in box.channels.items()}
    channels["packing"] = C.packing * r0 / ell
    kinetic, interaction = leading_parts(_spin_half(3, f1, f2, a))
    grow = math.log1p(r0 / ell)
    u1, u2 = math.log1p(eps1 / (f1 * V)), math.log1p(eps2 / (f2 * V))
    excess = (KINETIC_3D * (f1 ** (5.0 / 3.0) * math.expm1(2 * grow + 5.0 / 3.0 * u1)
                            + f2 ** (5.0 / 3.0) * math.expm1(2 * grow + 5.0 / 3.0 * u2))
              + interaction * math.expm1(3 * grow + u1 + u2))
    rep = BoundReport(3, "upper", box.kinetic / V, box.interaction / V, channels,
                      dict(box.brackets), {**box.schedule, "eps1": eps1, "eps2": eps2},
                      box.feasible, list(box.reasons), leading=kinetic + interaction,
                      extras=dict(box.extras), excess=excess)
    rep.eps_rho = rep.error / a
    rep.rate = x ** (2.0 / 9.0)
    return rep


def _lower_3d_unit(f1: float, f2: float, x: float, r0: float, C: BoundConstants) -> BoundReport:
    a = x
    R = x ** (3.0 / 26.0)
    s = x ** (1.0 / 26.0)
    eps = delta = x ** (1.0 / 13.0)
    base = 8.0 * math.pi * a * f1 * f2
    brackets = {
        "schwarz": eps,
        "projection": delta,
        "fermi_momentum": s**2 * (6.0 * math.pi**2) ** (2.0 / 3.0),
        "soft_remainder": C.soft_remainder * R**2 / (eps * s**2),
    }
    channels = {k: base * v for k, v in brackets.items()}
    channels["neighbour_count"] = C.neighbour_count * a * R**2
    reasons = []
    if R <= r0:
        reasons.append(f"R = {R:.3g} does not exceed R0 = {r0:.3g}")
        annulus = math.inf
    else:
        annulus = a / (R**3 - r0**3)
    channels["a_priori"] = C.a_priori * x**0.5 * (1.0 + 1.0 / delta) * (annulus + a / (eps * s**2 * R))
    feasible = _feasibility(brackets, C.feasibility, reasons)
    kinetic, interaction = leading_parts(_spin_half(3, f1, f2, a))
    rep = BoundReport(3, "lower", kinetic, interaction, channels, brackets,
                      {"R": R, "s": s, "eps": eps, "delta": delta, "a": a, "R0": r0},
                      feasible, reasons, leading=kinetic + interaction)
    rep.eps_rho = rep.error / a
    rep.rate = x ** (1.0 / 13.0)
    return rep


def _upper_2d_unit(f1: float, f2: float, L: float, r0_over_a: float, C: BoundConstants) -> BoundReport:
    """2D upper schedule at unit density, parametrised by L = |ln(a^2 rho)|."""
    alpha = C.alpha_2d
    log_a = -0.5 * L
    r0 = r0_over_a * math.exp(log_a)
    R = L ** (-alpha)
    s = 2.0 * R
    ell = L**2
    log_R_over_a = math.log(R) - log_a
    V = (ell + r0) ** 2
    n, eps1 = _ceil_count(f1 * V)
    m, eps2 = _ceil_count(f2 * V)
    area = ell**2
    dn, dm = n / area, m / area
    kinetic = KINETIC_2D * area * (dn**2 + dm**2)
    size = n**-0.5 + m**-0.5
    reference = 8.0 * math.pi / L * area * dn * dm
    # 4 pi / ln(R/a) = (8 pi / L)(1 + shift), shift = -ln R / ln(R/a) at unit density
    shift = -math.log(R) / log_R_over_a
    exact = reference * (1.0 + shift)
    norm = C.norm_loss_2d * (dn + dm) * area * R**2
    brackets = {
        "finite_size": C.finite_size * size,
        "log_coupling": C.log_coupling * shift,
        "norm_loss": norm,
        "particles_per_log": L / math.sqrt(min(n, m)),
    }
    reasons = []
    if log_R_over_a <= 0:
        reasons.append("R does not exceed a")
    feasible = _feasibility(brackets, C.feasibility, reasons)
    numerator = kinetic * (1 + C.finite_size * size) + reference + C.log_coupling * reference * shift
    channels = {
        "finite_size": kinetic * C.finite_size * size / V,
        "log_coupling": C.log_coupling * reference * shift / V,
        "norm_loss": numerator * (1.0 / (1.0 - norm) - 1.0) / V if norm < 1 else math.inf,
        "packing": C.packing * r0 / ell,
    }
    rep = BoundReport(2, "upper", kinetic / V, reference / V, channels, brackets,
                      {"n": n, "m": m, "ell": ell, "R": R, "s": s, "alpha": alpha, "eps1": eps1,
                       "eps2": eps2, "L": L, "R0": r0},
                      feasible, reasons, leading=KINETIC_2D * (f1**2 + f2**2) + 8.0 * math.pi / L * f1 * f2)
    grow = math.log1p(r0 / ell)
    u1, u2 = math.log1p(eps1 / (f1 * V)), math.log1p(eps2 / (f2 * V))
    rep.excess = (KINETIC_2D * (f1**2 * math.expm1(2 * grow + 2 * u1) + f2**2 * math.expm1(2 * grow + 2 * u2))
                  + 8.0 * math.pi / L * f1 * f2 * math.expm1(2 * grow + u1 + u2))
    rep.eps_rho = rep.error * L
    rep.rate = math.log(L) / L
    rep.extras["interaction_ratio"] = exact / reference
    return rep


def _lower_2d_unit(f1: float, f2: float, L: float, r0_over_a: float, C: BoundConstants) -> BoundReport:
    log_a = -0.5 * L
    r0 = r0_over_a * math.exp(log_a)
    R = L ** (-3.0 / 20.0)
    s = L ** (-1.0 / 20.0)
    eps = delta = L ** (-1.0 / 10.0)
    log_R_over_a = math.log(R) - log_a
    base = 8.0 * math.pi / L * f1 * f2
    brackets = {
        "schwarz": eps,
        "projection": delta,
        "fermi_momentum": s**2 * 4.0 * math.pi,
        "soft_remainder": C.soft_remainder * R**2 / (eps * s**2),
    }
    channels = {k: base * v for k, v in brackets.items()}
    channels["neighbour_count"] = C.neighbour_count / L * R
    reasons = []
    if R <= r0:
        reasons.append("R does not exceed R0")
    annulus = 2.0 / (log_R_over_a * (R**2 - r0**2))
    soft = 2.0 / (log_R_over_a * eps * s**2)
    channels["a_priori"] = C.a_priori * L**-0.5 * (1.0 + 1.0 / delta) * (annulus + soft)
    feasible = _feasibility(brackets, C.feasibility, reasons)
    kinetic = KINETIC_2D * (f1**2 + f2**2)
    rep = BoundReport(2, "lower", kinetic, base, channels, brackets,
                      {"R": R, "s": s, "eps": eps, "delta": delta, "L": L, "R0": r0},
                      feasible, reasons, leading=kinetic + base)
    rep.eps_rho = rep.error * L
    rep.rate = L ** (-1.0 / 10.0)
    return rep


_UNIT = {("upper", 3): _upper_3d_unit, ("lower", 3): _lower_3d_unit,
         ("upper", 2): _upper_2d_unit, ("lower", 2): _lower_2d_unit}

# coupling values deep in the asymptotic regime used to calibrate rate constants
_REFERENCE = {("upper", 3): 1e-60, ("lower", 3): 1e-200,
              ("upper", 2): 1e12, ("lower", 2): 1e60}


def rate_constant(kind: str, dimension: int, f1: float, f2: float, r0: float,
                  constants: BoundConstants = DEFAULT_CONSTANTS) -> float:
    """margin * eps(rho) / rate at a reference coupling deep in the asymptotic regime."""
    rep = _UNIT[(kind, dimension)](f1, f2, _REFERENCE[(kind, dimension)], r0, constants)
    return constants.rate_margin * rep.eps_rho / rep.rate


def _schedule(kind: str, rho1: float, rho2: float, a: float, R0: float, constants: BoundConstants,
              dimension: int) -> BoundReport:
    if a <= 0:
        raise ValueError("schedules need a > 0")
    rho, f1, f2 = _fractions(rho1, rho2)
    if dimension == 3:
        unit = rho ** (1.0 / 3.0)
        coupling, r0 = a * unit, R0 * unit
        energy, length = rho ** (5.0 / 3.0), 1.0 / unit
    elif dimension == 2:
        coupling, r0 = log_coupling(rho, a), R0 / a
        energy, length = rho**2, rho**-0.5
    else:
        raise ValueError("dimension must be 2 or 3")
    return _finish(kind, dimension, f1, f2, coupling, r0, constants, energy, length)


def _finish(kind, dimension, f1, f2, coupling, r0, constants, energy, length) -> BoundReport:
    rep = _UNIT[(kind, dimension)](f1, f2, coupling, r0, constants)
    rep.rate_constant = rate_constant(kind, dimension, f1, f2, r0, constants)
    rep.schedule["coupling"] = coupling
    return _scale_report(rep, energy, length)


def upper_bound_schedule(rho1: float, rho2: float, a: float, R0: float,
                         constants: BoundConstants = DEFAULT_CONSTANTS,
                         dimension: int = 3) -> BoundReport:
    """Upper bound on the energy density with the standard parameter schedule."""
    return _schedule("upper", rho1, rho2, a, R0, constants, dimension)


def lower_bound_schedule(rho1: float, rho2: float, a: float, R0: float,
                         constants: BoundConstants = DEFAULT_CONSTANTS,
                         dimension: int = 3) -> BoundReport:
    """Lower bound on the energy density with the standard parameter schedule."""
    return _schedule("lower", rho1, rho2, a, R0, constants, dimension)


def schedule_at_coupling(kind: str, dimension: int, coupling: float, fraction: float = 0.5,
                         r0: float = 1.0, constants: BoundConstants = DEFAULT_CONSTANTS) -> BoundReport:
    """Bound at unit total density given the dimensionless coupling directly.

    ``coupling`` is ``a rho^(1/3)`` in 3D (then ``r0 = R0 / a``) or
    ``|ln(a^2 rho)|`` in 2D (then ``r0 = R0 / a``).  Covers couplings whose
    physical density would under- or overflow a double.
    """
    f1, f2 = fraction, 1.0 - fraction
    if dimension == 3:
        return _finish(kind, 3, f1, f2, coupling, r0 * coupling, constants, 1.0, 1.0)
    return _finish(kind, 2, f1, f2, coupling, r0, constants, 1.0, 1.0)


# ---------------------------------------------------------------------------
# exponent fits


def fit_power(x, y) -> tuple[float, float]:
    """Slope and intercept of log y against log x."""
    slope, intercept = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(slope), float(intercept)


def fit_log_power(L, y) -> dict:
    """Fit log y = c + p log L + q log log L; also returns the plain power slope.

    ``q`` near 1 with ``p`` near -1 signals the ln(L)/L behaviour.
    """
    L = np.asarray(L, float)
    y = np.asarray(y, float)
    A = np.column_stack([np.ones_like(L), np.log(L), np.log(np.log(L))])
    (c, p, q), *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
    plain, _ = fit_power(L, y)
    scaled, _ = fit_power(L, y * L / np.log(L))
    return {"p": float(p), "q": float(q), "c": float(c), "plain_slope": plain,
            "slope_after_log_correction": scaled}


def coupling_grid(lo: float, hi: float, count: int) -> np.ndarray:
    if count < 2 or not (0 < lo < hi):
        raise ValueError("need 0 < lo < hi and at least two points")
    return np.geomspace(lo, hi, count)


def sweep(dimension: int, couplings, fraction: float = 0.5, r0: float = 1.0,
          constants: BoundConstants = DEFAULT_CONSTANTS) -> list[dict]:
    """Upper, leading and lower bounds at each coupling (unit total density)."""
    rows = []
    for g in couplings:
        up = schedule_at_coupling("upper", dimension, float(g), fraction, r0, constants)
        lo = schedule_at_coupling("lower", dimension, float(g), fraction, r0, constants)
        rows.append({"coupling": float(g), "leading": up.leading, "upper": up.total,
                     "lower": lo.total, "upper_feasible": up.feasible,
                     "lower_feasible": lo.feasible, "eps_upper": up.eps_rho,
                     "eps_lower": lo.eps_rho, "upper_within_rate": up.within_rate,
                     "lower_within_rate": lo.within_rate,
                     "sandwich": bool(lo.error >= 0 and up.error >= 0),
                     "upper_channels": up.channels, "lower_channels": lo.channels})
    return rows


def fit_sweep(dimension: int, rows: list[dict]) -> dict:
    """Exponent fits of the error terms over the feasible rows of a sweep."""
    up = [r for r in rows if r["upper_feasible"]]
    lo = [r for r in rows if r["lower_feasible"]]
    out: dict = {"upper_points": len(up), "lower_points": len(lo)}
    if dimension == 3:
        if len(up) >= 2:
            out["upper_slope"] = fit_power([r["coupling"] for r in up], [r["eps_upper"] for r in up])[0]
        if len(lo) >= 2:
            out["lower_slope"] = fit_power([r["coupling"] for r in lo], [r["eps_lower"] for r in lo])[0]
    else:
        if len(up) >= 3:
            out["upper_fit"] = fit_log_power([r["coupling"] for r in up], [r["eps_upper"] for r in up])
        if len(lo) >= 2:
            out["lower_slope"] = fit_power([r["coupling"] for r in lo], [r["eps_lower"] for r in lo])[0]
    return out
