"""Zero-energy two-body scattering in 3D and 2D.

Solves ``-Laplace(phi) + v phi / 2 = 0`` for a radial potential by outward
shooting with an adaptive embedded Runge-Kutta integrator (DOP853), split at
every breakpoint of the potential.  The scattering length is extracted by a
least-squares fit of the exterior solution:

* 3D: ``u = r phi`` is fitted to ``alpha (r - a)`` on ``[R0, r_max]``.
* 2D: ``phi`` is fitted to ``A ln(r / a)`` on ``[R0, r_max]``.

The energy integral ``int (|grad phi|^2 + v phi^2 / 2)`` over a ball is
carried along as an extra ODE component so it is available at every radius.

A hard core enters as the boundary condition ``phi = 0`` at the core radius.
Inside the core ``phi`` vanishes identically, so the measure
``Laplace(phi)`` picks up a surface term on the core (see
:attr:`ScatteringSolution.core_measure`) while the energy integral gets no
core contribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp, quad

from .potentials import RadialPotential

_RTOL_FLOOR = 100 * np.finfo(float).eps


class ScatteringError(RuntimeError):
    """Integration failed or the requested tolerance is out of reach."""

    def __init__(self, message: str, residual: float = math.nan):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


@dataclass(eq=False)
class ScatteringSolution:
    """Radial zero-energy solution and its scattering length.

    ``profile_r``/``profile_phi`` sample ``phi`` on the integrator's own
    adaptive grid.  Use :meth:`phi` and :meth:`dphi` for evaluation anywhere.
    3D solutions are normalized by ``phi -> 1`` at infinity; 2D solutions by
    ``phi(R_ref) = 1``.
    """

    dimension: int
    a: float
    potential: RadialPotential
    profile_r: np.ndarray
    profile_phi: np.ndarray
    normalization: str
    R_ref: float | None
    r_max: float
    residual: float
    tolerance: float
    core_measure: float = 0.0
    _segments: list = field(default_factory=list, repr=False)
    _scale: float = 1.0
    _ext: tuple = ()

    # -- raw (unnormalized) state -------------------------------------------
    def _raw(self, r: np.ndarray) -> np.ndarray:
        """ODE state (3 x len(r)) at radii within [start, r_max]."""
        out = np.empty((3, r.size))
        bounds = np.array([s[1] for s in self._segments])
        idx = np.clip(np.searchsorted(bounds, r, side="left"), 0, len(self._segments) - 1)
        for k in np.unique(idx):
            m = idx == k
            out[:, m] = self._segments[k][2](r[m])
        return out

    def phi(self, r) -> np.ndarray:
        """Normalized radial profile at ``r`` (vectorized)."""
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        out = np.empty(flat.shape)
        if not self._segments:
            out[:] = 1.0
            return out.reshape(r.shape)
        rc = self.potential.hard_core_radius
        core = flat < rc
        out[core] = 0.0
        far = flat > self.r_max
        mid = ~core & ~far
        if np.any(mid):
            y = self._raw(flat[mid])
            if self.dimension == 3:
                rr = flat[mid]
                with np.errstate(invalid="ignore", divide="ignore"):
                    val = np.where(rr > 0, y[0] / np.where(rr > 0, rr, 1.0), y[1])
                out[mid] = val / self._scale
            else:
                out[mid] = y[0] / self._scale
        if np.any(far):
            out[far] = self._exterior(flat[far])
        return out.reshape(r.shape)

    def dphi(self, r) -> np.ndarray:
        """Radial derivative of the normalized profile."""
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        out = np.zeros(flat.shape)
        if not self._segments:
            return out.reshape(r.shape)
        rc = self.potential.hard_core_radius
        far = flat > self.r_max
        mid = (flat >= rc) & ~far
        if np.any(mid):
            y = self._raw(flat[mid])
            rr = flat[mid]
            safe = np.where(rr > 0, rr, 1.0)
            if self.dimension == 3:
                val = np.where(rr > 0, (y[1] * rr - y[0]) / safe**2, 0.0)
            else:
                val = np.where(rr > 0, y[1] / safe, 0.0)
            out[mid] = val / self._scale
        if np.any(far):
            out[far] = self._exterior_derivative(flat[far])
        return out.reshape(r.shape)

    def _exterior(self, r):
        if self.dimension == 3:
            return 1.0 - self.a / r
        A = self._ext[0]
        return A * np.log(r / self.a) / self._scale

    def _exterior_derivative(self, r):
        if self.dimension == 3:
            return self.a / r**2
        return self._ext[0] / r / self._scale

    def energy_raw(self, R: float) -> float:
        """Unnormalized ``int_{|x|<=R}(|grad phi|^2 + v phi^2/2)``."""
        if not self._segments:
            return 0.0
        if R < self.potential.hard_core_radius:
            return 0.0
        return float(self._raw(np.array([R]))[2, 0])

    def exterior_residual(self, r_hi: float | None = None, num: int = 400) -> float:
        """Max deviation of the solved profile from the exterior form on [R0, r_hi]."""
        if not self._segments or self.a == 0:
            return 0.0
        R0 = self.potential.R0
        r_hi = min(r_hi or 10 * R0, self.r_max)
        r = np.linspace(R0, r_hi, num)
        if self.dimension == 3:
            target = 1.0 - self.a / r
        else:
            target = self._ext[0] * np.log(r / self.a) / self._scale
        return float(np.max(np.abs(self.phi(r) - target)))


def _check_dimension(dimension: int) -> None:
    if dimension not in (2, 3):
        raise ValueError("dimension must be 2 or 3")


def _segments_for(potential: RadialPotential, r_start: float, r_max: float) -> list[float]:
    pts = [x for x in potential.breakpoints() if x > r_start]
    pts = sorted(set([r_start] + pts + [potential.R0, r_max]))
    return [x for x in pts if x >= r_start]


def solve_zero_energy(potential: RadialPotential, dimension: int = 3, tolerance: float = 1e-10,
                      r_max: float | None = None, R_ref: float | None = None) -> ScatteringSolution:
    """Integrate the zero-energy scattering equation and extract ``a``.

    Parameters
    ----------
    potential : RadialPotential
        Must validate.
    dimension : {2, 3}
    tolerance : float
        Relative tolerance handed to the integrator.
    r_max : float, optional
        Outer radius of the integration; at least ``10 * R0``.
    R_ref : float, optional
        2D normalization radius (``phi(R_ref) = 1``); defaults to ``r_max``.

    Raises
    ------
    ScatteringError
        If the integrator fails or ``tolerance`` is below what double
        precision can deliver.
    """
    _check_dimension(dimension)
    report = potential.validate()
    if not report.passed:
        raise ValueError("invalid potential: " + "; ".join(report.failures))
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    R0 = potential.R0
    r_max = max(10.0 * R0, r_max or 0.0, 1e-300)

    if potential.is_zero:
        r = np.linspace(0.0, r_max, 3)
        return ScatteringSolution(dimension, 0.0, potential, r, np.ones_like(r),
                                  "phi(inf)=1" if dimension == 3 else "phi=1 (free)",
                                  None, r_max, 0.0, tolerance)

    rtol = max(tolerance, _RTOL_FLOOR)
    rc = potential.hard_core_radius

    def rhs(r, y):
        v = potential.evaluate(r) if r >= rc else 0.0
        if not math.isfinite(v):
            v = 0.0
        if dimension == 3:
            u, du, _ = y
            t = du - u / r if r > 0 else 0.0
            return [du, 0.5 * v * u, 4 * math.pi * (t * t + 0.5 * v * u * u)]
        phi, w, _ = y
        if r > 0:
            return [w / r, 0.5 * v * r * phi, 2 * math.pi * (w * w / r + 0.5 * v * r * phi * phi)]
        return [0.0, 0.0, 0.0]

    if dimension == 3:
        y0 = [0.0, 1.0, 0.0]
    elif rc > 0:
        y0 = [0.0, rc, 0.0]
    else:
        y0 = [1.0, 0.0, 0.0]

    edges = _segments_for(potential, rc, r_max)
    segments = []
    grid_r, grid_y = [], []
    y = np.array(y0, dtype=float)
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        # midpoint evaluation keeps piecewise-constant tails on the right side of a jump
        sol = solve_ivp(rhs, (lo, hi), y, method="DOP853", rtol=rtol,
                        atol=rtol * 1e-3 * max(1.0, float(np.max(np.abs(y)))), dense_output=True)
        if not sol.success:
            raise ScatteringError(f"integration failed on [{lo}, {hi}]: {sol.message}")
        segments.append((lo, hi, sol.sol))
        grid_r.append(sol.t)
        grid_y.append(sol.y)
        y = sol.y[:, -1]
    r_grid = np.concatenate(grid_r)
    y_grid = np.concatenate(grid_y, axis=1)

    # exterior least-squares fit on [R0, r_max]
    r_fit = np.union1d(r_grid[r_grid >= R0], np.linspace(R0, r_max, 200))
    seg_hi = np.array([s[1] for s in segments])
    idx = np.clip(np.searchsorted(seg_hi, r_fit, side="left"), 0, len(segments) - 1)
    y_fit = np.empty((3, r_fit.size))
    for k in np.unique(idx):
        m = idx == k
        y_fit[:, m] = segments[k][2](r_fit[m])

    if dimension == 3:
        design = np.column_stack([r_fit, np.ones_like(r_fit)])
        (alpha, beta), *_ = np.linalg.lstsq(design, y_fit[0], rcond=None)
        a = -beta / alpha
        resid = float(np.max(np.abs(y_fit[0] - (alpha * r_fit + beta))) / max(abs(alpha) * r_max, 1e-300))
        scale = alpha
        ext = (alpha,)
        normalization = "phi(inf)=1"
        core = 4 * math.pi * rc**2 * (y0[1] / rc) / alpha if rc > 0 else 0.0
        R_ref_out = None
    else:
        design = np.column_stack([np.log(r_fit), np.ones_like(r_fit)])
        (A, B), *_ = np.linalg.lstsq(design, y_fit[0], rcond=None)
        if potential.is_pure_hard_core:
            a = rc
            log_a = math.log(rc)
        else:
            log_a = -B / A
            a = math.exp(log_a)
            if a == 0.0:
                raise ScatteringError(f"2D scattering length exp({log_a:.4g}) underflows", 0.0)
        resid = float(np.max(np.abs(y_fit[0] - (A * np.log(r_fit) + B))) / max(abs(A * (math.log(r_max) - log_a)), 1e-300))
        R_ref_out = float(R_ref) if R_ref is not None else r_max
        if R_ref_out < R0:
            raise ValueError("R_ref must be >= R0")
        scale = A * (math.log(R_ref_out) - log_a)
        ext = (A,)
        normalization = "phi(R_ref)=1"
        core = 2 * math.pi * rc * (y0[1] / rc) / scale if rc > 0 else 0.0

    if tolerance < _RTOL_FLOOR:
        raise ScatteringError(f"tolerance {tolerance:g} below double-precision floor {_RTOL_FLOOR:g}", resid)
    if not (a >= 0 and math.isfinite(a)):
        raise ScatteringError("scattering length extraction failed", resid)

    if dimension == 3:
        with np.errstate(invalid="ignore", divide="ignore"):
            phi_grid = np.where(r_grid > 0, y_grid[0] / np.where(r_grid > 0, r_grid, 1.0), y_grid[1]) / scale
    else:
        phi_grid = y_grid[0] / scale

    return ScatteringSolution(dimension, float(a), potential, r_grid, phi_grid, normalization,
                              R_ref_out, r_max, resid, tolerance, float(core), segments, float(scale), ext)


def scattering_length(potential: RadialPotential, dimension: int = 3, tolerance: float = 1e-10) -> float:
    return solve_zero_energy(potential, dimension, tolerance).a


def _ensure_reach(solution: ScatteringSolution, R: float) -> ScatteringSolution:
    if R <= solution.r_max:
        return solution
    return solve_zero_energy(solution.potential, solution.dimension, solution.tolerance,
                             r_max=R + solution.potential.R0, R_ref=solution.R_ref)


def scattering_energy_integral(solution: ScatteringSolution, R: float) -> float:
    """``int_{|x|<=R} (|grad phi|^2 + v phi^2 / 2) dx`` for ``R >= R0``.

    3D uses the ``phi -> 1`` normalization (value ``4 pi a (1 - a/R)``); 2D
    normalizes ``phi(R) = 1`` (value ``2 pi / ln(R/a)``).
    """
    if R < solution.potential.R0:
        raise ValueError("R must be >= R0")
    if solution.a == 0:
        return 0.0
    sol = _ensure_reach(solution, R)
    raw = sol.energy_raw(R)
    if sol.dimension == 3:
        return raw / sol._scale**2
    A = sol._ext[0]
    phi_R = A * math.log(R / sol.a)
    return raw / phi_R**2


def laplacian_mass(solution: ScatteringSolution) -> float:
    """Total mass of the measure ``Laplace(phi)`` (3D: ``4 pi a``).

    Sum of the core surface term and ``int v phi / 2`` over the tail.
    """
    if solution.a == 0:
        return 0.0
    pot = solution.potential
    omega = 4 * math.pi if solution.dimension == 3 else 2 * math.pi
    d = solution.dimension
    total = solution.core_measure
    pts = pot.breakpoints()
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi <= lo:
            continue
        val, _ = quad(lambda r: omega * r ** (d - 1) * 0.5 * pot.evaluate(r) * solution.phi(r),
                      lo, hi, epsabs=0, epsrel=1e-11, limit=200)
        total += val
    return total


@dataclass(eq=False)
class CutoffProfile:
    """Jastrow factor ``f`` cut off at ``R`` and its energy density ``xi``.

    3D: ``f = phi / (1 - a/R)`` for ``r <= R``; 2D: ``f = phi / phi(R)``.
    ``f = 1`` beyond ``R`` and ``xi = |f'|^2 + v f^2 / 2`` vanishes there.
    """

    solution: ScatteringSolution
    R: float
    integral: float
    _norm: float = 1.0

    @property
    def a(self) -> float:
        return self.solution.a

    @property
    def dimension(self) -> int:
        return self.solution.dimension

    def f(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.ones(r.shape)
        m = r <= self.R
        if np.any(m):
            out[m] = self.solution.phi(r[m]) / self._norm
        return out

    def df(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        m = r < self.R
        if np.any(m):
            out[m] = self.solution.dphi(r[m]) / self._norm
        return out

    def xi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        pot = self.solution.potential
        m = (r < self.R) & (r >= pot.hard_core_radius)
        if np.any(m):
            rr = r[m]
            v = pot.evaluate(rr)
            v = np.where(np.isfinite(v), v, 0.0)
            f = self.f(rr)
            out[m] = self.df(rr) ** 2 + 0.5 * v * f**2
        return out


def xi_profile(solution: ScatteringSolution, R: float) -> CutoffProfile:
    """Build the cut-off profile ``f`` and ``xi`` at radius ``R > R0``."""
    R0 = solution.potential.R0
    if not R > R0 and solution.a > 0:
        raise ValueError("R must exceed R0")
    if solution.a == 0:
        return CutoffProfile(solution, float(R), 0.0, 1.0)
    if solution.dimension == 3 and not solution.a < R:
        raise ValueError("R must exceed the scattering length")
    sol = _ensure_reach(solution, R)
    if sol.dimension == 3:
        norm = 1.0 - sol.a / R
    else:
        norm = float(sol.phi(np.array([R]))[0])
    integral = sol.energy_raw(R) / (sol._scale * norm) ** 2
    return CutoffProfile(sol, float(R), float(integral), float(norm))
