"""Dirichlet-box Fermi seas.

Eigenfunctions of the Dirichlet Laplacian on ``[0, l]^d`` are sine products
indexed by positive integer vectors ``k`` with eigenvalue ``pi^2 |k|^2 / l^2``.
The Fermi sea of ``n`` particles fills the ``n`` lowest modes; ties inside a
degenerate shell are broken lexicographically so the selection is
reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog

KINETIC_3D = 0.6 * (6 * math.pi**2) ** (2.0 / 3.0)
KINETIC_2D = 2 * math.pi


def _check_dimension(dimension: int) -> None:
    if dimension not in (2, 3):
        raise ValueError("dimension must be 2 or 3")


def _shell_counts(r2_max: int, dimension: int) -> np.ndarray:
    """counts[m] = number of positive-integer k in Z^d with |k|^2 = m, m <= r2_max."""
    one = np.zeros(r2_max + 1, dtype=np.int64)
    j = np.arange(1, math.isqrt(r2_max) + 1)
    one[j * j] = 1
    out = one
    for _ in range(dimension - 1):
        # direct convolution on the sparse square set keeps everything integer
        nxt = np.zeros(r2_max + 1, dtype=np.int64)
        for q in j * j:
            nxt[q:] += out[: r2_max + 1 - q]
        out = nxt
    return out


@lru_cache(maxsize=64)
def _integer_energy(n: int, dimension: int) -> int:
    """Sum of |k|^2 over the n lowest Dirichlet modes, as an exact integer."""
    r2 = max(dimension, int(math.ceil((2 * dimension * n / math.pi) ** (2.0 / dimension))) + 4)
    while True:
        counts = _shell_counts(r2, dimension)
        if counts.sum() >= n:
            break
        r2 *= 2
    total = 0
    left = n
    for m in np.nonzero(counts)[0]:
        take = min(int(counts[m]), left)
        total += take * int(m)
        left -= take
        if left == 0:
            break
    return total


def dirichlet_energy_coefficient(n: int, dimension: int = 3) -> int:
    """Integer ``c`` with ``E^D(n, l) = c * pi^2 / l^2``."""
    _check_dimension(dimension)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > 10**7:
        raise ValueError("n above 1e7 is not supported")
    return _integer_energy(int(n), dimension)


def dirichlet_energy_sum(n: int, ell: float, dimension: int = 3) -> float:
    """Sum of the ``n`` lowest Dirichlet eigenvalues in a box of side ``ell``."""
    if not ell > 0:
        raise ValueError("ell must be positive")
    return dirichlet_energy_coefficient(n, dimension) * math.pi**2 / ell**2


def leading_kinetic(n: float, ell: float, dimension: int = 3) -> float:
    """Thermodynamic Fermi energy of ``n`` spinless particles in volume ``ell^d``."""
    _check_dimension(dimension)
    if dimension == 3:
        return KINETIC_3D * n ** (5.0 / 3.0) / ell**2
    return KINETIC_2D * n**2 / ell**2


def fermi_leading_term(densities, dimension: int = 3) -> float:
    """Kinetic energy density ``sum_i c_d rho_i^{1+2/d}`` of free Fermi seas."""
    _check_dimension(dimension)
    rho = np.asarray(densities, dtype=float)
    if np.any(rho < 0):
        raise ValueError("densities must be non-negative")
    if dimension == 3:
        return float(KINETIC_3D * np.sum(rho ** (5.0 / 3.0)))
    return float(KINETIC_2D * np.sum(rho**2))


def enumerate_modes(n: int, dimension: int = 3) -> np.ndarray:
    """First ``n`` Dirichlet modes as an ``(n, d)`` integer array.

    Ordered by ``|k|^2``, then lexicographically.
    """
    _check_dimension(dimension)
    if n < 1:
        raise ValueError("n must be >= 1")
    r = max(2.0, (2 * dimension * n / math.pi) ** (1.0 / dimension))
    while True:
        kmax = int(math.floor(r))
        axes = [np.arange(1, kmax + 1)] * dimension
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dimension)
        sq = np.sum(grid**2, axis=1)
        inside = sq <= r * r
        if inside.sum() >= n:
            grid, sq = grid[inside], sq[inside]
            # completeness: any mode with |k|^2 <= the n-th value is inside the ball
            keys = [grid[:, a] for a in range(dimension - 1, -1, -1)] + [sq]
            order = np.lexsort(keys)
            return grid[order[:n]].astype(np.int64)
        r *= 1.3


@dataclass(frozen=True, eq=False)
class FermiSeaSpec:
    """``n`` lowest Dirichlet modes in ``[0, ell]^dimension``."""

    n: int
    ell: float
    dimension: int = 3
    modes: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        _check_dimension(self.dimension)
        if not self.ell > 0:
            raise ValueError("ell must be positive")
        if self.modes is None:
            object.__setattr__(self, "modes", enumerate_modes(self.n, self.dimension))

    @property
    def eigenvalues(self) -> np.ndarray:
        return math.pi**2 * np.sum(self.modes**2, axis=1) / self.ell**2

    @property
    def energy(self) -> float:
        return float(np.sum(self.eigenvalues))

    @property
    def fermi_momentum(self) -> float:
        rho = self.n / self.ell**self.dimension
        return (6 * math.pi**2 * rho) ** (1 / 3) if self.dimension == 3 else math.sqrt(4 * math.pi * rho)

    def _check_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise ValueError(f"points must have {self.dimension} coordinates")
        tol = 1e-12 * self.ell
        if np.any(x < -tol) or np.any(x > self.ell + tol):
            raise ValueError("point outside the box")
        return x

    def orbitals(self, x) -> np.ndarray:
        """Normalized sine products, shape ``x.shape[:-1] + (n,)``."""
        x = self._check_points(x)
        amp = (2.0 / self.ell) ** (self.dimension / 2)
        kmax = int(self.modes.max())
        freqs = np.arange(1, kmax + 1)
        out = None
        for a in range(self.dimension):
            # one sine table per axis, gathered per mode
            table = np.sin(math.pi * x[..., a, None] * freqs / self.ell)
            part = table[..., self.modes[:, a] - 1]
            out = part * amp if out is None else out * part
        return out

    def kernel(self, x, y) -> np.ndarray:
        """Projection kernel ``K(x, y) = sum_k phi_k(x) phi_k(y)``."""
        return np.sum(self.orbitals(x) * self.orbitals(y), axis=-1)


def one_particle_density(spec: FermiSeaSpec, x) -> np.ndarray:
    """``sum_k |phi_k(x)|^2``; vectorized over leading axes of ``x``."""
    return np.sum(spec.orbitals(x) ** 2, axis=-1)


def two_particle_density(spec: FermiSeaSpec, x, y) -> np.ndarray:
    """``rho(x) rho(y) - K(x, y)^2``, the pair density of the Slater determinant.

    Normalized so that it integrates to ``n (n - 1)``.
    """
    px, py = spec.orbitals(x), spec.orbitals(y)
    return np.sum(px**2, -1) * np.sum(py**2, -1) - np.sum(px * py, -1) ** 2


def density_square_coefficient(n: int, dimension: int = 3) -> Fraction:
    """Exact rational ``sum_{p,q} prod_a (1 + delta_{p_a q_a}/2)`` over the sea."""
    modes = enumerate_modes(n, dimension)
    total = Fraction(0)
    for size in range(dimension + 1):
        for axes in itertools.combinations(range(dimension), size):
            if axes:
                _, counts = np.unique(modes[:, list(axes)], axis=0, return_counts=True)
                sq = int(np.sum(counts.astype(np.int64) ** 2))
            else:
                sq = n * n
            total += Fraction(sq, 2**size)
    return total


def density_square_integral(n: int, ell: float, dimension: int = 3) -> float:
    """``int rho_n(x)^2 dx`` over the box, in closed form."""
    if not ell > 0:
        raise ValueError("ell must be positive")
    return float(density_square_coefficient(n, dimension)) / ell**dimension


def box_quadrature(ell: float, dimension: int, order: int):
    """Tensor Gauss-Legendre nodes (N, d) and weights (N,) on ``[0, ell]^d``."""
    t, w = np.polynomial.legendre.leggauss(order)
    t = 0.5 * ell * (t + 1)
    w = 0.5 * ell * w
    pts = np.stack(np.meshgrid(*[t] * dimension, indexing="ij"), -1).reshape(-1, dimension)
    wts = np.prod(np.stack(np.meshgrid(*[w] * dimension, indexing="ij"), -1).reshape(-1, dimension), axis=1)
    return pts, wts


def density_square_quadrature(spec: FermiSeaSpec) -> float:
    """Brute-force ``int rho^2`` by tensor Gauss quadrature (independent check)."""
    kmax = int(spec.modes.max())
    # rho^2 holds frequencies up to 4 kmax per axis; Gauss-Legendre resolves
    # them to near machine precision with this many nodes
    order = 4 * kmax + 24
    pts, wts = box_quadrature(spec.ell, spec.dimension, order)
    rho = one_particle_density(spec, pts)
    return float(np.sum(wts * rho**2))


@dataclass(frozen=True)
class GammaFilter:
    """``Gamma(p) = max(1 - k_F^2 / |p|^2, 0)``."""

    k_F: float

    def __call__(self, p) -> np.ndarray:
        p = np.abs(np.asarray(p, dtype=float))
        with np.errstate(divide="ignore"):
            g = 1.0 - self.k_F**2 / np.where(p > 0, p * p, np.inf)
        g = np.where(p > 0, g, 0.0)
        return np.clip(g, 0.0, 1.0)

    @classmethod
    def from_density(cls, rho: float) -> "GammaFilter":
        return cls((6 * math.pi**2 * rho) ** (1.0 / 3.0))


@dataclass(frozen=True)
class BathtubReport:
    closed_form: float
    grid_minimum: float
    filled_radius: float
    expected_radius: float
    relative_error: float
    minimizer_is_ball: bool


def low_momentum_bound(N1: float, rho: float, L: float, shells: int = 4000,
                       check: bool = True) -> BathtubReport:
    """Lower bound for ``sum_i <phi_i| p (1 - Gamma) p |phi_i>`` over N1 orbitals in a cube.

    The closed form is the free Fermi energy of ``N1`` particles in volume
    ``L^3``.  With ``check`` set, the infimum of ``int p^2 (1 - Gamma) xi``
    over ``0 <= xi <= (2 pi)^-3 L^3``, ``int xi = N1`` is also solved as a
    linear program on radial shells (exact shell integrals of the symbol),
    and the filled region is compared with the centered ball.
    """
    if N1 < 0 or not L > 0 or not rho > 0:
        raise ValueError("need N1 >= 0, L > 0, rho > 0")
    if N1 / L**3 > rho * (1 + 1e-12):
        raise ValueError("N1 / L^3 must not exceed rho")
    closed = KINETIC_3D * N1 ** (5.0 / 3.0) / L**2
    radius = (6 * math.pi**2 * N1 / L**3) ** (1.0 / 3.0)
    if not check or N1 == 0:
        return BathtubReport(closed, closed, radius, radius, 0.0, True)
    kF = GammaFilter.from_density(rho).k_F
    cap = L**3 / (2 * math.pi) ** 3
    p_top = 2.0 * max(kF, radius)
    edges = np.linspace(0.0, p_top, shells + 1)
    lo, hi = edges[:-1], edges[1:]
    vol = 4 * math.pi * (hi**3 - lo**3) / 3
    # int_shell p^2 (1 - Gamma) d^3p: p^2 below k_F, k_F^2 above
    a, b = np.minimum(lo, kF), np.minimum(hi, kF)
    cost = 4 * math.pi * (b**5 - a**5) / 5 + kF**2 * 4 * math.pi * (np.maximum(hi, kF) ** 3 - np.maximum(lo, kF) ** 3) / 3
    # variables: fraction t_j in [0, 1] of shell j filled at the cap
    res = linprog(cost * cap, A_eq=(vol * cap)[None, :], b_eq=[N1], bounds=[(0, 1)] * shells,
                  method="highs")
    if not res.success:
        raise RuntimeError(f"bathtub linear program failed: {res.message}")
    t = res.x
    partial = np.nonzero((t > 1e-9) & (t <= 1 - 1e-9))[0]
    filled = np.nonzero(t > 1e-9)[0]
    contiguous = filled.size == 0 or (filled[0] == 0 and np.all(np.diff(filled) == 1) and partial.size <= 1)
    if filled.size:
        k = filled[-1]
        r_fill = (lo[k] ** 3 + t[k] * (hi[k] ** 3 - lo[k] ** 3)) ** (1 / 3)
    else:
        r_fill = 0.0
    gm = float(res.fun)
    rel = abs(gm - closed) / closed
    return BathtubReport(closed, gm, float(r_fill), radius, rel, bool(contiguous))


def estimate_finite_size_exponent(n_values, dimension: int = 3):
    """Fit ``log(E^D / leading - 1)`` against ``log n``; returns (slope, intercept)."""
    n = np.asarray(n_values, dtype=float)
    rel = np.array([dirichlet_energy_coefficient(int(k), dimension) * math.pi**2 / leading_kinetic(k, 1.0, dimension) - 1
                    for k in n_values])
    slope, intercept = np.polyfit(np.log(n), np.log(rel), 1)
    return float(slope), float(intercept)
