"""Two particles (one per spin) in a Dirichlet box, solved by Rayleigh-Ritz.

The basis is the tensor product of single-particle sine modes with every
index at most ``cutoff`` per axis.  The interaction depends only on the
relative coordinate, so each matrix element factorises per axis into a
one-dimensional overlap correlation ``C(r_j)`` evaluated at the
quadrature nodes of the potential's support:

    <p|v|q> = int v(r) prod_j C_j[p_j, q_j](r_j) dr

The ground state lies in the sector that is even under the joint
reflection of both particles through the box centre along every axis,
which keeps only mode pairs with ``k + k'`` even.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dyson import radial_rule, sphere_rule
from .fermi_box import density_square_integral
from .potentials import RadialPotential

MAX_BASIS = 6000
CONVERGENCE_TOL = 1e-3


class EigenSolverFailure(RuntimeError):
    """The dense eigensolver did not converge."""


class BasisNotConverged(RuntimeError):
    """Ground-state energy still moves between the two largest cutoffs."""

    def __init__(self, relative_change: float, tol: float):
        super().__init__(f"relative change {relative_change:.3e} between the two largest cutoffs "
                         f"exceeds {tol:.1e}")
        self.relative_change = relative_change


@dataclass(frozen=True)
class TwoBodyProblem:
    potential: RadialPotential
    ell: float
    cutoff: int
    dimension: int = 3
    quadrature: tuple[int, int, int] = (8, 8, 16)

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if int(self.cutoff) != self.cutoff or self.cutoff < 2:
            raise ValueError("cutoff must be an integer >= 2")
        if not self.ell > 0:
            raise ValueError("ell must be positive")
        if self.potential.hard_core_radius > 0:
            raise ValueError("hard cores cannot be represented in the sine basis")
        if not self.potential.validate():
            raise ValueError(f"invalid potential: {self.potential.validate().failures}")
        if self.potential.R0 >= self.ell:
            raise ValueError("potential range must be shorter than the box")
        size = basis_size(self.cutoff, self.dimension)
        if size > MAX_BASIS:
            raise ValueError(f"basis of {size} states exceeds the limit {MAX_BASIS}")


@dataclass
class TwoBodyResult:
    energy: float
    free_energy: float
    cutoffs: list[int]
    trace: list[float]
    basis_sizes: list[int]
    relative_change: float
    converged: bool
    extras: dict = field(default_factory=dict)

    @property
    def shift(self) -> float:
        return self.energy - self.free_energy

    def to_dict(self) -> dict:
        return {"energy": self.energy, "free_energy": self.free_energy, "shift": self.shift,
                "cutoffs": list(self.cutoffs), "trace": list(self.trace),
                "basis_sizes": list(self.basis_sizes), "relative_change": self.relative_change,
                "converged": self.converged, **self.extras}


def free_energy(ell: float, dimension: int = 3) -> float:
    """Two particles in the lowest Dirichlet mode."""
    return 2 * dimension * math.pi**2 / ell**2


def axis_pairs(cutoff: int) -> np.ndarray:
    """Per-axis mode pairs ``(k, k')`` with ``k + k'`` even, shape (P, 2)."""
    return np.array([(k, q) for k in range(1, cutoff + 1) for q in range(1, cutoff + 1)
                     if (k + q) % 2 == 0])


def basis_size(cutoff: int, dimension: int) -> int:
    return len(axis_pairs(cutoff)) ** dimension


def axis_correlation(pairs: np.ndarray, r: np.ndarray, ell: float) -> np.ndarray:
    """``C[n, p, q] = int phi_k1 phi_k3 (x) phi_k2 phi_k4 (x - r_n) dx``.

    ``p = (k1, k2)`` and ``q = (k3, k4)``; the integral runs over the
    segment where both ``x`` and ``x - r`` lie in ``[0, ell]``.
    """
    r = np.asarray(r, dtype=float)[:, None, None]
    k1, k2 = pairs[:, 0][:, None], pairs[:, 1][:, None]
    k3, k4 = pairs[:, 0][None, :], pairs[:, 1][None, :]
    w = math.pi / ell
    lo = np.maximum(r, 0.0)
    hi = np.minimum(ell + r, ell)
    length = hi - lo
    mid = 0.5 * (hi + lo)
    total = np.zeros(np.broadcast_shapes(r.shape, k1.shape, k3.shape))
    # phi_a phi_b = (cos((a-b) w x) - cos((a+b) w x)) / ell
    for mu_k, s_mu in (((k1 - k3) * w, 1.0), ((k1 + k3) * w, -1.0)):
        for nu_k, s_nu in (((k2 - k4) * w, 1.0), ((k2 + k4) * w, -1.0)):
            for omega, phase in ((mu_k + nu_k, -nu_k * r), (mu_k - nu_k, nu_k * r)):
                seg = length * np.cos(omega * mid + phase) * np.sinc(omega * length / (2 * math.pi))
                total += (0.5 * s_mu * s_nu) * seg
    return total / ell**2


def _radial_edges(potential: RadialPotential, max_panels: int = 4) -> list[float]:
    edges = {0.0, potential.R0}
    dense_table = False
    for piece in potential.pieces:
        if piece.kind == "const":
            edges.update((piece.r_lo, piece.r_hi))
        elif len(piece.points) <= max_panels + 1:
            edges.update(x for x, _ in piece.points)
        else:
            dense_table = True
    if dense_table:
        edges.update(np.linspace(0.0, potential.R0, max_panels + 1)[1:-1].tolist())
    return sorted(e for e in edges if 0.0 <= e <= potential.R0)


def interaction_nodes(potential: RadialPotential, dimension: int, quadrature=(8, 8, 16)):
    """Quadrature points in the support ball and weights ``w * v(r)``."""
    n_radial, n_polar, n_azimuth = quadrature
    r, wr = radial_rule(_radial_edges(potential), n_radial)
    dirs, wd = sphere_rule(dimension, n_polar, n_azimuth)
    vr = np.asarray(potential(r), dtype=float)
    keep = vr != 0
    r, wr, vr = r[keep], wr[keep], vr[keep]
    pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, dimension)
    weights = ((wr * vr * r ** (dimension - 1))[:, None] * wd[None, :]).ravel()
    return pts, weights


def _interaction_block(pts, weights, pairs, ell, dimension):
    P = len(pairs)
    tables = [axis_correlation(pairs, pts[:, j], ell) for j in range(dimension)]
    if dimension == 2:
        lhs = (tables[0] * weights[:, None, None]).reshape(len(weights), P * P)
        out = lhs.T @ tables[1].reshape(len(weights), P * P)
        return out.reshape(P, P, P, P).transpose(0, 2, 1, 3).reshape(P * P, P * P)
    xy = (tables[0][:, :, None, :, None] * tables[1][:, None, :, None, :]) * weights[:, None, None, None, None]
    out = xy.reshape(len(weights), P**4).T @ tables[2].reshape(len(weights), P * P)
    # axes: (a, b, a', b', c, c') -> (a, b, c, a', b', c')
    out = out.reshape(P, P, P, P, P, P).transpose(0, 1, 4, 2, 3, 5)
    return out.reshape(P**3, P**3)


def interaction_matrix(problem: TwoBodyProblem, threads: int = 1, chunk: int = 256) -> np.ndarray:
    """Interaction part of the Hamiltonian at the problem's cutoff.

    Node chunks may be assembled on several threads; partial sums are
    added in chunk order so the result does not depend on scheduling.
    """
    pairs = axis_pairs(problem.cutoff)
    pts, weights = interaction_nodes(problem.potential, problem.dimension, problem.quadrature)
    size = len(pairs) ** problem.dimension
    if len(weights) == 0:
        return np.zeros((size, size))
    starts = range(0, len(weights), chunk)

    def block(i):
        return _interaction_block(pts[i:i + chunk], weights[i:i + chunk], pairs, problem.ell,
                                  problem.dimension)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(block, starts))
    else:
        parts = [block(i) for i in starts]
    total = np.zeros((size, size))
    for part in parts:
        total += part
    return 0.5 * (total + total.T)


def kinetic_diagonal(cutoff: int, ell: float, dimension: int) -> np.ndarray:
    pairs = axis_pairs(cutoff)
    per_axis = (pairs**2).sum(axis=1) * (math.pi / ell) ** 2
    grids = np.meshgrid(*([per_axis] * dimension), indexing="ij")
    return sum(grids).ravel()


def _state_mask(cutoff: int, sub: int, dimension: int) -> np.ndarray:
    inside = axis_pairs(cutoff).max(axis=1) <= sub
    grids = np.meshgrid(*([inside] * dimension), indexing="ij")
    return np.logical_and.reduce(grids).ravel()


def _lowest(h: np.ndarray) -> float:
    try:
        vals = scipy.linalg.eigh(h, eigvals_only=True, subset_by_index=[0, 0])
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise EigenSolverFailure(str(exc)) from exc
    if not np.isfinite(vals[0]):
        raise EigenSolverFailure("non-finite eigenvalue")
    return float(vals[0])


def ground_state_energy(problem: TwoBodyProblem, threads: int = 1, require_converged: bool = False,
                        tol: float = CONVERGENCE_TOL) -> TwoBodyResult:
    """Lowest eigenvalue at every cutoff from 2 up to ``problem.cutoff``.

    The smaller bases are nested inside the largest, so one assembly
    serves the whole trace.  ``converged`` compares the two largest
    cutoffs against ``tol``; with ``require_converged`` a failure raises.
    """
    d, K = problem.dimension, problem.cutoff
    h = interaction_matrix(problem, threads=threads)
    h[np.diag_indices_from(h)] += kinetic_diagonal(K, problem.ell, d)
    cutoffs, trace, sizes = [], [], []
    for k in range(2, K + 1):
        mask = _state_mask(K, k, d)
        trace.append(_lowest(h[np.ix_(mask, mask)]))
        cutoffs.append(k)
        sizes.append(int(mask.sum()))
    change = abs(trace[-1] - trace[-2]) / abs(trace[-1]) if len(trace) > 1 else math.inf
    converged = change < tol
    if require_converged and not converged:
        raise BasisNotConverged(change, tol)
    return TwoBodyResult(trace[-1], free_energy(problem.ell, d), cutoffs, trace, sizes, change,
                         converged)


def mode_density_square(ell: float, dimension: int = 3) -> float:
    """``int |phi_1|^4`` over the box: ``(3 / (2 ell))^d``."""
    return density_square_integral(1, ell, dimension)


def pseudopotential_prediction(a: float, ell: float, dimension: int = 3) -> float:
    """Free energy plus the contact-interaction shift.

    3D uses ``8 pi a``.  The 2D value uses ``4 pi / |ln(a^2 rho)|`` per
    pair with the box density ``rho = 2 / ell^2`` and is heuristic only.
    """
    if a < 0:
        raise ValueError("a must be non-negative")
    base = free_energy(ell, dimension)
    if a == 0:
        return base
    overlap = mode_density_square(ell, dimension)
    if dimension == 3:
        return base + 8 * math.pi * a * overlap
    if dimension == 2:
        rho = 2.0 / ell**2
        if a * a * rho >= 1:
            raise ValueError("2D prediction needs a^2 rho < 1")
        return base + 8 * math.pi / abs(math.log(a * a * rho)) * overlap
    raise ValueError("dimension must be 2 or 3")
