"""Momentum-cutoff soft potentials.

A smooth cutoff chi_s(p) = l(s p) removes low momenta from the kinetic
energy.  The transform h of 1 - chi_s is a radial kernel of width ~s; from it
we build the envelope f_R, the soft potential w_R and the annulus potential U
that together replace a short-range interaction by a bounded one.

Units: hbar^2/2m = 1.  Transforms use f^(k) = (2 pi)^(-d/2) int f(x) e^{ikx} dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.special import j0, j1
from scipy.spatial import cKDTree

from .potentials import RadialPotential
from .scattering import solve_zero_energy

# unit-width kernel is tabulated on [0, _TABLE_RADIUS]; beyond it |h| < 1e-14
_TABLE_RADIUS = 300.0
_TABLE_STEP = 0.005
_TAIL_FRACTION = 1e-12


def _exp_bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    up = _exp_bump(t)
    down = _exp_bump(1.0 - t)
    out = np.where(t >= 1.0, 1.0, 0.0)
    mid = (t > 0) & (t < 1)
    out[mid] = up[mid] / (up[mid] + down[mid])
    return out


def ramp_profile(p):
    """l(p): 0 for |p| <= 1, 1 for |p| >= 2."""
    return smooth_step(np.abs(np.asarray(p, dtype=float)) - 1.0)


@dataclass(frozen=True)
class MomentumCutoff:
    """chi_s(p) = l(s p).  ``s = 0`` is the plateau limit chi = 1."""

    s: float

    def __post_init__(self):
        if not self.s >= 0 or not math.isfinite(self.s):
            raise ValueError(f"cutoff length must be finite and >= 0, got {self.s}")

    @property
    def trivial(self) -> bool:
        return self.s == 0.0

    def chi(self, p):
        p = np.asarray(p, dtype=float)
        if self.trivial:
            return np.ones_like(p)
        return ramp_profile(self.s * p)

    def complement(self, p):
        return 1.0 - self.chi(p)

    @property
    def band_edge(self) -> float:
        """Momentum beyond which 1 - chi vanishes."""
        return 0.0 if self.trivial else 2.0 / self.s


# ---------------------------------------------------------------------------
# unit kernel h_1 (s = 1)

def _gauss_panels(a: float, b: float, panels: int, order: int = 16):
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    width = np.diff(edges)
    nodes = edges[:-1, None] + 0.5 * width[:, None] * (t + 1.0)
    weights = 0.5 * width[:, None] * w
    return nodes.ravel(), weights.ravel()


def _sphbessel_deriv(u):
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 1e-3
    safe = np.where(small, 1.0, u)
    big = (safe * np.cos(safe) - np.sin(safe)) / safe**2
    return np.where(small, -u / 3.0 + u**3 / 30.0, big)


def _band_multiplier(p: np.ndarray, kind: str) -> np.ndarray:
    keep = 1.0 - ramp_profile(p)
    if kind == "h":
        return keep
    if kind == "k2":
        # p^2 (1 - chi^2) = p^2 (1 - chi)(1 + chi)
        return p**2 * keep * (2.0 - keep)
    raise ValueError(f"unknown kernel kind {kind!r}")


def _unit_kernel_chunk(r: np.ndarray, dimension: int, derivative: bool, kind: str) -> np.ndarray:
    rmax = float(r.max()) if r.size else 0.0
    panels = max(4, int(math.ceil(rmax / 3.0)))
    p, w = _gauss_panels(0.0, 2.0, 2 * panels)
    weight = w * _band_multiplier(p, kind)
    # h carries (2 pi)^(-d/2); the k2 kernel is a plain inverse transform, (2 pi)^(-d)
    norm = (2.0 * math.pi) ** (-dimension / 2 if kind == "h" else -dimension)
    arg = np.outer(r, p)
    if dimension == 3:
        pref = 4.0 * math.pi * norm
        if derivative:
            return pref * (_sphbessel_deriv(arg) @ (weight * p**3))
        return pref * (np.sinc(arg / math.pi) @ (weight * p**2))
    pref = 2.0 * math.pi * norm
    if derivative:
        return -pref * (j1(arg) @ (weight * p**2))
    return pref * (j0(arg) @ (weight * p))


def unit_kernel(r, dimension: int, derivative: bool = False, kind: str = "h") -> np.ndarray:
    """Unit-width radial kernel (or its derivative) by Gauss-Legendre panels over the band.

    ``kind="h"`` is the transform of 1 - chi_1; ``kind="k2"`` is the inverse
    transform of p^2 (1 - chi_1^2).
    """
    if dimension not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    flat = r.ravel()
    order = np.argsort(flat)
    out = np.empty_like(flat)
    for start in range(0, flat.size, 2048):
        idx = order[start:start + 2048]
        out[idx] = _unit_kernel_chunk(flat[idx], dimension, derivative, kind)
    return out.reshape(r.shape)


_CHEB_WIDTH = 0.5
_CHEB_DEGREE = 24


def _clenshaw(coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Evaluate per-point Chebyshev series: coeffs has shape (npoints, degree + 1)."""
    b1 = np.zeros_like(t)
    b2 = np.zeros_like(t)
    for k in range(coeffs.shape[1] - 1, 0, -1):
        b1, b2 = 2.0 * t * b1 - b2 + coeffs[:, k], b1
    return t * b1 - b2 + coeffs[:, 0]


@dataclass(frozen=True)
class _UnitTable:
    """Piecewise Chebyshev fit of h_1 plus its critical points and tail envelope."""

    coeffs: np.ndarray
    dcoeffs: np.ndarray
    radii: np.ndarray
    values: np.ndarray
    suffix_max: np.ndarray
    critical: np.ndarray
    critical_values: np.ndarray
    sup_derivative: float
    tail_radius: float
    tail_rate: float
    tail_scale: float

    def evaluate(self, r: np.ndarray, derivative: bool = False) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        idx = np.floor(flat / _CHEB_WIDTH).astype(int)
        inside = idx < self.coeffs.shape[0]
        idx = np.clip(idx, 0, self.coeffs.shape[0] - 1)
        t = 2.0 * (flat - idx * _CHEB_WIDTH) / _CHEB_WIDTH - 1.0
        table = self.dcoeffs if derivative else self.coeffs
        out = np.where(inside, _clenshaw(table[idx], t), 0.0)
        return out.reshape(r.shape)


@lru_cache(maxsize=8)
def _unit_table(dimension: int, kind: str = "h") -> _UnitTable:
    n_int = int(round(_TABLE_RADIUS / _CHEB_WIDTH))
    k = np.arange(_CHEB_DEGREE + 1)
    t = np.cos(np.pi * (k + 0.5) / (_CHEB_DEGREE + 1))
    left = np.arange(n_int) * _CHEB_WIDTH
    nodes = left[:, None] + 0.5 * _CHEB_WIDTH * (t + 1.0)
    samples = unit_kernel(nodes, dimension, kind=kind)
    cheb = np.polynomial.chebyshev
    coeffs = np.array([cheb.chebfit(t, row, _CHEB_DEGREE) for row in samples])
    dcoeffs = np.array([np.append(cheb.chebder(c) * 2.0 / _CHEB_WIDTH, 0.0) for c in coeffs])
    proto = _UnitTable(coeffs, dcoeffs, *([None] * 9))

    radii = np.arange(0.0, _TABLE_RADIUS, _TABLE_STEP)
    values = proto.evaluate(radii)
    slopes = proto.evaluate(radii, derivative=True)
    suffix_max = np.maximum.accumulate(np.abs(values)[::-1])[::-1]
    peak = abs(values[0])

    crit = [0.0]
    sign_change = np.nonzero(np.sign(slopes[1:]) * np.sign(slopes[:-1]) < 0)[0]
    deriv = lambda x: float(proto.evaluate(np.array([x]), derivative=True)[0])
    for i in sign_change:
        # past this point the kernel is below round-off and roots are noise
        if i == 0 or suffix_max[i] < 1e-14 * peak:
            continue
        crit.append(brentq(deriv, radii[i], radii[i + 1], xtol=1e-15, rtol=1e-15))
    crit = np.array(crit)

    below = np.nonzero(suffix_max < _TAIL_FRACTION * peak)[0]
    tail_radius = float(radii[below[0]]) if below.size else _TABLE_RADIUS

    # envelope c exp(-kappa sqrt(r)) through the suffix maxima at two radii
    lo, hi = 0.25 * tail_radius, tail_radius
    m_lo = suffix_max[int(round(lo / _TABLE_STEP))]
    m_hi = suffix_max[min(int(round(hi / _TABLE_STEP)), radii.size - 1)]
    kappa = math.log(m_lo / m_hi) / (math.sqrt(hi) - math.sqrt(lo))
    scale = m_hi * math.exp(kappa * math.sqrt(hi))
    return _UnitTable(coeffs, dcoeffs, radii, values, suffix_max, crit, proto.evaluate(crit),
                      float(np.max(np.abs(slopes))), tail_radius, kappa, scale)


@dataclass(frozen=True)
class RadialKernel:
    """h_s(r) = s^-d h_1(r/s), the transform of 1 - chi_s."""

    dimension: int
    cutoff: MomentumCutoff

    @property
    def s(self) -> float:
        return self.cutoff.s

    @property
    def _table(self) -> _UnitTable:
        return _unit_table(self.dimension)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.cutoff.trivial:
            return np.zeros_like(r)
        return self.s ** -self.dimension * self._table.evaluate(r / self.s)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.cutoff.trivial:
            return np.zeros_like(r)
        return self.s ** (-self.dimension - 1) * self._table.evaluate(r / self.s, derivative=True)

    @property
    def peak(self) -> float:
        return 0.0 if self.cutoff.trivial else self.s ** -self.dimension * abs(self._table.values[0])

    @property
    def sup_derivative(self) -> float:
        return 0.0 if self.cutoff.trivial else self.s ** (-self.dimension - 1) * self._table.sup_derivative

    @property
    def critical_radii(self) -> np.ndarray:
        return self.s * self._table.critical

    @property
    def critical_values(self) -> np.ndarray:
        return self.s ** -self.dimension * self._table.critical_values

    @property
    def tail_radius(self) -> float:
        """Radius beyond which the tail envelope is below 1e-12 of the peak."""
        return 0.0 if self.cutoff.trivial else self.s * self._table.tail_radius

    def tail_bound(self, r):
        """Envelope T(r) >= |h(r')| for all r' >= r."""
        r = np.asarray(r, dtype=float)
        if self.cutoff.trivial:
            return np.zeros_like(r)
        t = self._table
        u = r / self.s
        idx = np.clip(np.floor(u / _TABLE_STEP).astype(int), 0, t.radii.size - 1)
        inside = t.suffix_max[idx]
        fit = t.tail_scale * np.exp(-t.tail_rate * np.sqrt(np.maximum(u, 0.0)))
        return self.s ** -self.dimension * np.where(u <= _TABLE_RADIUS, np.maximum(inside, 0.0), fit)

    def integral(self) -> float:
        """Direct radial quadrature of the total integral of h."""
        if self.cutoff.trivial:
            return 0.0
        r, w = _gauss_panels(0.0, self.tail_radius, int(self.tail_radius / self.s * 4) + 8)
        shell = 4.0 * math.pi * r**2 if self.dimension == 3 else 2.0 * math.pi * r
        return float(np.sum(w * shell * self(r)))

    def transform_at_zero(self) -> float:
        """(2 pi)^(d/2) (1 - chi)(0): what ``integral`` must equal."""
        return (2.0 * math.pi) ** (self.dimension / 2) * float(self.cutoff.complement(0.0))


def build_kernel(cutoff: MomentumCutoff, dimension: int) -> RadialKernel:
    if dimension not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    return RadialKernel(dimension, cutoff)


# ---------------------------------------------------------------------------
# f_R and w_R

def _window_extremes(kernel: RadialKernel, lo: np.ndarray, hi: np.ndarray):
    """Max and min of h over [lo, hi] from endpoints and interior critical points."""
    h_lo, h_hi = kernel(lo), kernel(hi)
    top = np.maximum(h_lo, h_hi)
    bottom = np.minimum(h_lo, h_hi)
    crit = kernel.critical_radii
    vals = kernel.critical_values
    first = np.searchsorted(crit, lo, side="left")
    last = np.searchsorted(crit, hi, side="right")
    span = int(np.max(last - first)) if lo.size else 0
    for k in range(span):
        j = first + k
        ok = j < last
        jj = np.where(ok, j, 0)
        top = np.where(ok, np.maximum(top, vals[jj]), top)
        bottom = np.where(ok, np.minimum(bottom, vals[jj]), bottom)
    return top, bottom


@dataclass
class EnvelopeProfile:
    """f_R(r) = sup_{|y| <= R} |h(x - y) - h(x)| at |x| = r.

    Over the ball, |x - y| sweeps exactly [max(0, r - R), r + R], so the
    supremum is attained at a window endpoint or at an interior critical
    point of h.  Critical points are located by root bracketing, which makes
    the evaluation exact up to root tolerance.
    """

    kernel: RadialKernel
    R: float
    _integral: float | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.R < 0:
            raise ValueError("R must be >= 0")

    @property
    def dimension(self) -> int:
        return self.kernel.dimension

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        if self.R == 0.0 or self.kernel.cutoff.trivial:
            return np.zeros_like(r)
        shape = r.shape
        flat = r.ravel()
        lo = np.maximum(flat - self.R, 0.0)
        hi = flat + self.R
        top, bottom = _window_extremes(self.kernel, lo, hi)
        centre = self.kernel(flat)
        return np.maximum(top - centre, centre - bottom).reshape(shape)

    @property
    def support_radius(self) -> float:
        return self.kernel.tail_radius + self.R

    def quadrature(self, per_s: int = 16, order: int = 12):
        """Radial nodes and shell weights covering the effective support."""
        s = self.kernel.s
        rmax = self.support_radius
        panels = int(math.ceil(rmax / s * per_s)) + 4
        r, w = _gauss_panels(0.0, rmax, panels, order)
        shell = 4.0 * math.pi * r**2 if self.dimension == 3 else 2.0 * math.pi * r
        return r, w * shell

    def integral(self) -> float:
        if self.R == 0.0 or self.kernel.cutoff.trivial:
            return 0.0
        if self._integral is None:
            r, w = self.quadrature()
            self._integral = float(np.sum(w * self(r)))
        return self._integral

    def sup(self) -> float:
        if self.R == 0.0 or self.kernel.cutoff.trivial:
            return 0.0
        r = np.linspace(0.0, self.support_radius, 20001)
        vals = self(r)
        i = int(np.argmax(vals))
        lo, hi = r[max(i - 1, 0)], r[min(i + 1, r.size - 1)]
        fine = np.linspace(lo, hi, 401)
        return float(max(vals[i], np.max(self(fine))))

    def mean_value_bound(self) -> float:
        """R sup|h'|, which dominates f_R everywhere."""
        return self.R * self.kernel.sup_derivative


def envelope_f_R(kernel: RadialKernel, R: float, c: float = 0.5) -> EnvelopeProfile:
    if kernel.s > 0 and R > c * kernel.s * (1 + 1e-12):
        raise ValueError(f"R = {R} exceeds {c} * s = {c * kernel.s}")
    return EnvelopeProfile(kernel, float(R))


def sampled_f_R(kernel: RadialKernel, R: float, x, samples: int = 4000,
                rng: np.random.Generator | None = None) -> float:
    """Brute-force sup over random points of the ball around x, plus the ball's poles."""
    rng = np.random.default_rng(0) if rng is None else rng
    x = np.asarray(x, dtype=float)
    d = x.size
    dirs = rng.normal(size=(samples, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = R * rng.random(samples) ** (1.0 / d)
    radii[: samples // 4] = R
    y = dirs * radii[:, None]
    rx = np.linalg.norm(x)
    if rx > 0:
        unit = x / rx
        y = np.vstack([y, R * unit, -R * unit, -min(R, rx) * unit])
    dist = np.linalg.norm(x[None, :] - y, axis=1)
    return float(np.max(np.abs(kernel(dist) - kernel(np.array(rx)))))


@dataclass
class SoftPotential:
    """w_R = c_d f_R int f_R with c_3 = 2/pi^2 and c_2 = 2/pi."""

    envelope: EnvelopeProfile

    @property
    def dimension(self) -> int:
        return self.envelope.dimension

    @property
    def prefactor(self) -> float:
        return 2.0 / math.pi**2 if self.dimension == 3 else 2.0 / math.pi

    def __call__(self, r):
        return self.prefactor * self.envelope.integral() * self.envelope(r)

    def sup(self) -> float:
        return self.prefactor * self.envelope.integral() * self.envelope.sup()

    def integral(self) -> float:
        return self.prefactor * self.envelope.integral() ** 2

    @property
    def support_radius(self) -> float:
        return self.envelope.support_radius

    def shell_table(self, per_s: int, order: int = 12):
        """Gauss nodes on panels of width s / per_s over the support, and r^(d-1) w_R(r) weights.

        Cached per (per_s, order); callers take a prefix of whole panels.
        """
        cache = self.__dict__.setdefault("_shell_tables", {})
        key = (int(per_s), int(order))
        if key not in cache:
            width = self.envelope.kernel.s / key[0]
            panels = int(math.ceil(self.support_radius / width))
            r, w = _gauss_panels(0.0, panels * width, panels, key[1])
            cache[key] = (width, r, w * r ** (self.dimension - 1) * self(r))
        return cache[key]


# ---------------------------------------------------------------------------
# U

@dataclass(frozen=True)
class AnnulusPotential:
    """Constant potential on R0 <= |x| <= R."""

    dimension: int
    R0: float
    R: float
    a: float
    height: float
    nu: float | None = None

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        return np.where((r >= self.R0) & (r <= self.R), self.height, 0.0)

    @property
    def volume(self) -> float:
        if self.dimension == 3:
            return 4.0 * math.pi / 3.0 * (self.R**3 - self.R0**3)
        return math.pi * (self.R**2 - self.R0**2)

    @property
    def integral(self) -> float:
        return self.height * self.volume

    def log_moment(self) -> float:
        """int U ln(|x|/a) in 2D by adaptive quadrature."""
        from scipy.integrate import quad
        val, _ = quad(lambda r: 2 * math.pi * r * math.log(r / self.a), self.R0, self.R,
                      epsabs=0, epsrel=1e-13)
        return self.height * val

    def nu_sandwich(self) -> tuple[float, float, float]:
        """(lower, nu, upper) for the 2D normalisation."""
        if self.dimension != 2:
            raise ValueError("nu is defined in two dimensions only")
        lower = 0.5 * (self.R**2 - self.R0**2) * (math.log(self.R / self.a) - 0.5)
        upper = 0.5 * self.R**2 * math.log(self.R / self.a)
        return lower, self.nu, upper


def nu_of_R(R0: float, R: float, a: float) -> float:
    g = lambda r: r * r * (2.0 * math.log(r / a) - 1.0) if r > 0 else 0.0
    return 0.25 * (g(R) - g(R0))


def annulus_U(R0: float, R: float, a: float, dimension: int) -> AnnulusPotential:
    if dimension not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    if not (R > R0 >= a >= 0):
        raise ValueError(f"need R > R0 >= a >= 0, got R={R}, R0={R0}, a={a}")
    if dimension == 3:
        return AnnulusPotential(3, R0, R, a, 3.0 / (R**3 - R0**3))
    if a <= 0:
        raise ValueError("2D annulus potential needs a > 0")
    nu = nu_of_R(R0, R, a)
    return AnnulusPotential(2, R0, R, a, 1.0 / nu, nu)


# ---------------------------------------------------------------------------
# kit

@dataclass
class SoftPotentialKit:
    dimension: int
    cutoff: MomentumCutoff
    kernel: RadialKernel
    R: float
    a: float
    R0: float
    f_R: EnvelopeProfile
    w_R: SoftPotential
    U: AnnulusPotential

    @property
    def s(self) -> float:
        return self.cutoff.s

    @property
    def tail_radius(self) -> float:
        return self.kernel.tail_radius

    def tail_bound(self, r):
        return self.kernel.tail_bound(r)

    @property
    def w_weight(self) -> float:
        """Coefficient of int w_R |psi|^2 per unit 1/epsilon."""
        if self.dimension == 3:
            return self.a
        return self.U.integral / (2.0 * math.pi)

    @property
    def u_weight(self) -> float:
        """Coefficient of int U |psi|^2 per unit (1 - epsilon)."""
        return self.a if self.dimension == 3 else 1.0


def build_kit(dimension: int, s: float, R: float, a: float, R0: float,
              c: float = 0.5) -> SoftPotentialKit:
    cutoff = MomentumCutoff(s)
    kernel = build_kernel(cutoff, dimension)
    env = envelope_f_R(kernel, R, c)
    return SoftPotentialKit(dimension, cutoff, kernel, R, a, R0, env, SoftPotential(env),
                            annulus_U(R0, R, a, dimension))


def kit_for_potential(potential: RadialPotential, dimension: int, s: float, R: float,
                      c: float = 0.5) -> SoftPotentialKit:
    a = solve_zero_energy(potential, dimension).a
    return build_kit(dimension, s, R, a, potential.R0, c)


def w_R_potential(kit: SoftPotentialKit) -> dict:
    """Bound report for w_R: sup, integral and the constants against the stated scalings."""
    w = kit.w_R
    R, s = kit.R, kit.s
    sup_w, int_w = w.sup(), w.integral()
    if kit.dimension == 3:
        sup_const = sup_w * s**5 / R**2 if R > 0 else 0.0
    else:
        sup_const = sup_w * s**4 / R**2 if R > 0 else 0.0
    return {
        "sup_w": sup_w,
        "int_w": int_w,
        "sup_constant": sup_const,
        "int_constant": int_w * s**2 / R**2 if R > 0 else 0.0,
        "envelope_sup": kit.f_R.sup(),
        "envelope_integral": kit.f_R.integral(),
        "mean_value_bound": kit.f_R.mean_value_bound(),
    }


def fit_w_scalings(dimension: int, R: float, s_values) -> dict:
    """Log-log slopes of sup w_R and int w_R against s at fixed R."""
    s_values = np.asarray(s_values, dtype=float)
    sups, ints = [], []
    for s in s_values:
        kit = build_kit(dimension, s, R, a=R / 4, R0=R / 2)
        sups.append(kit.w_R.sup())
        ints.append(kit.w_R.integral())
    x = np.log(s_values)
    sup_slope = float(np.polyfit(x, np.log(sups), 1)[0])
    int_slope = float(np.polyfit(x, np.log(ints), 1)[0])
    return {"s": s_values.tolist(), "sup_w": sups, "int_w": ints,
            "sup_slope": sup_slope, "int_slope": int_slope}


# ---------------------------------------------------------------------------
# configurations

def _as_points(points, dimension: int | None = None) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return np.zeros((0, dimension or 3))
    if pts.ndim == 1:
        pts = pts[None, :]
    return pts


def nearest_neighbor_distances(points) -> np.ndarray:
    pts = _as_points(points)
    if len(pts) < 2:
        return np.full(len(pts), np.inf)
    dist, _ = cKDTree(pts).query(pts, k=2)
    return dist[:, 1]


def nearest_neighbor_count_I_R(points, R: float, method: str = "tree") -> int:
    """Number of points whose nearest neighbour is closer than 2R."""
    pts = _as_points(points)
    if len(pts) < 2:
        return 0
    if method == "brute":
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt(np.sum(diff**2, axis=-1))
        np.fill_diagonal(dist, np.inf)
        return int(np.sum(dist.min(axis=1) < 2 * R))
    if method != "tree":
        raise ValueError(f"unknown method {method!r}")
    return int(np.sum(nearest_neighbor_distances(pts) < 2 * R))


@dataclass
class SoftField:
    """W_Y(x) summed over the retained centres."""

    kit: SoftPotentialKit
    eps: float
    centres: np.ndarray
    dropped: int

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(len(x))
        k = self.kit
        for y in self.centres:
            r = np.linalg.norm(x - y, axis=1)
            out += (1 - self.eps) * k.u_weight * k.U(r) - k.w_weight / self.eps * k.w_R(r)
        return out


def soft_field_W_Y(Y, kit: SoftPotentialKit, eps: float) -> SoftField:
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    pts = _as_points(Y, kit.dimension)
    keep = nearest_neighbor_distances(pts) >= 2 * kit.R if len(pts) else np.zeros(0, bool)
    return SoftField(kit, eps, pts[keep], int(len(pts) - keep.sum()))


def lattice_sum_sup(points, profile: Callable, spacing: float, refine: int = 6) -> float:
    """sup_x sum_i profile(|x - y_i|) by a grid scan followed by Nelder-Mead polishing."""
    pts = _as_points(points)
    if len(pts) == 0:
        return 0.0
    d = pts.shape[1]

    def total(x):
        return float(np.sum(profile(np.linalg.norm(pts - x, axis=1))))

    lo, hi = pts.min(axis=0) - spacing, pts.max(axis=0) + spacing
    axes = [np.arange(lo[i], hi[i] + spacing / 2, spacing / 2) for i in range(d)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    best_vals = np.empty(len(grid))
    for start in range(0, len(grid), 1024):
        chunk = grid[start:start + 1024]
        dist = np.linalg.norm(chunk[:, None, :] - pts[None, :, :], axis=-1)
        best_vals[start:start + 1024] = profile(dist).sum(axis=1)
    top = grid[np.argsort(best_vals)[-refine:]]
    best = float(best_vals.max())
    for x0 in top:
        res = minimize(lambda x: -total(x), x0, method="Nelder-Mead",
                       options={"xatol": spacing * 1e-4, "fatol": 1e-14, "maxiter": 400})
        best = max(best, -float(res.fun))
    return best


def random_separated_cloud(count: int, spacing: float, side: float, dimension: int,
                           rng: np.random.Generator, periodic: bool = False) -> np.ndarray:
    """Uniform points in [0, side)^d with pairwise distance >= spacing, by rejection."""
    pts: list[np.ndarray] = []
    tries = 0
    while len(pts) < count:
        tries += 1
        if tries > 200000:
            raise RuntimeError("could not place separated points at this density")
        x = rng.random(dimension) * side
        if pts:
            diff = np.array(pts) - x
            if periodic:
                diff -= side * np.round(diff / side)
            if np.min(np.linalg.norm(diff, axis=1)) < spacing:
                continue
        pts.append(x)
    return np.array(pts)


@dataclass
class PeriodicSum:
    """sup over x of sum_i w(x - y_i) over a periodic configuration.

    Images nearer than ``r_near`` are summed exactly from a radial table; the
    remainder is replaced by its mean, density * int_{|x| > r_near} w.
    """

    sup: float
    near_radius: float
    far_mean: float
    points: int
    side: float


def periodic_lattice_sum(points, side: float, profile: Callable, support: float,
                         r_near: float, spacing: float, refine: int = 4) -> PeriodicSum:
    pts = _as_points(points)
    n, d = pts.shape
    density = n / side**d

    table_r = np.linspace(0.0, r_near, 40001)
    table_w = profile(table_r)
    far_r, far_w = _gauss_panels(r_near, support, max(8, int(8 * (support - r_near) / spacing)), 12)
    shell = 4.0 * math.pi * far_r**2 if d == 3 else 2.0 * math.pi * far_r
    far_mean = density * float(np.sum(far_w * shell * profile(far_r)))

    reach = int(math.ceil(r_near / side)) + 1
    shifts = np.stack(np.meshgrid(*[np.arange(-reach, reach + 1)] * d, indexing="ij"), -1).reshape(-1, d)
    images = (pts[None, :, :] + side * shifts[:, None, :]).reshape(-1, d)
    tree = cKDTree(images)
    kmax = min(len(images), int(density * (4.19 if d == 3 else 3.15) * r_near**d * 1.5) + 32)

    def total(x):
        x = np.atleast_2d(x)
        dist, _ = tree.query(x, k=kmax, distance_upper_bound=r_near)
        near = np.where(np.isfinite(dist), np.interp(np.minimum(dist, r_near), table_r, table_w), 0.0)
        return near.sum(axis=1) + far_mean

    axis = np.arange(0.0, side, spacing)
    grid = np.stack(np.meshgrid(*[axis] * d, indexing="ij"), -1).reshape(-1, d)
    vals = np.concatenate([total(grid[i:i + 2048]) for i in range(0, len(grid), 2048)])
    best = float(vals.max())
    for x0 in grid[np.argsort(vals)[-refine:]]:
        res = minimize(lambda x: -float(total(x)[0]), x0, method="Nelder-Mead",
                       options={"xatol": spacing * 1e-3, "fatol": 1e-14, "maxiter": 300})
        best = max(best, -float(res.fun))
    return PeriodicSum(best, r_near, far_mean, n, side)


def lattice_sum_constant(kit: SoftPotentialKit, count: int, packing: float = 0.2,
                         seed: int = 0, near: float = 10.0) -> float:
    """Periodic sup_x sum_i w_R(x - y_i), in units of 1/(R s^2) (3D) or 1/s^2 (2D).

    ``packing`` is the number of points per (2R)^d cell; the cell side grows
    with ``count`` so the density stays fixed.
    """
    rng = np.random.default_rng(seed)
    d = kit.dimension
    side = 2 * kit.R * (count / packing) ** (1.0 / d)
    pts = random_separated_cloud(count, 2 * kit.R, side, d, rng, periodic=True)
    res = periodic_lattice_sum(pts, side, kit.w_R, kit.w_R.support_radius,
                               near * kit.s, kit.s / 4)
    scale = kit.R * kit.s**2 if d == 3 else kit.s**2
    return res.sup * scale
