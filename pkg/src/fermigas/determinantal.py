"""Weighted Slater determinants over a Dirichlet Fermi sea.

For orbitals ``phi_alpha`` and a one-body weight ``h``, the state
``Phi(X) = D_n(X) prod_i h(x_i)`` (``D_n`` normalized) has

* norm ``det M`` with ``M_ab = int phi_a phi_b |h|^2``,
* k-particle densities ``(1/k!) prod |h(x_i)|^2 det[(x_i|M^-1|x_j)]``,
* ``sum_i ||Phi'_i||^2 = det M * Tr[K M^-1]`` when ``h(x_i)`` is replaced by
  ``k(x_i)`` in one factor at a time.

This module evaluates those closed forms and, separately, brute-force
references that integrate ``|Phi|^2`` over all ``n*d`` coordinates without
using any of them.  The references use cosine-polynomial weights on uniform
grids, where the trapezoid rule is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constants import DEVIATION_CONSTANT
from .errors import QuadratureError, ScheduleInfeasible, SingularOverlap
from .fermi_box import FermiSeaSpec
from .scattering import CutoffProfile

CONDITION_LIMIT = 1e12


# -- quadrature ---------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    """Composite tensor Gauss-Legendre rule with panel doubling."""

    order: int | None = None
    panels: int = 1
    tol: float = 1e-11
    max_panels: int = 16


def _composite_nodes(ell: float, order: int, panels: int):
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, ell, panels + 1)
    h = np.diff(edges)
    x = (edges[:-1, None] + 0.5 * h[:, None] * (t[None, :] + 1)).ravel()
    wx = (0.5 * h[:, None] * w[None, :]).ravel()
    return x, wx


def _tensor_gram(basis: FermiSeaSpec, weight2: Callable, kfun2: Callable | None,
                 order: int, panels: int):
    """Gram matrices of |h|^2 (and |k|^2) on one tensor rule, chunked over nodes."""
    x, wx = _composite_nodes(basis.ell, order, panels)
    d = basis.dimension
    n = basis.n
    M = np.zeros((n, n))
    K = np.zeros((n, n)) if kfun2 is not None else None
    # outer loop over the first axis keeps memory at (len(x)^(d-1), n)
    rest = np.stack(np.meshgrid(*[x] * (d - 1), indexing="ij"), -1).reshape(-1, d - 1)
    wrest = np.prod(np.stack(np.meshgrid(*[wx] * (d - 1), indexing="ij"), -1).reshape(-1, d - 1), axis=1)
    for x0, w0 in zip(x, wx):
        pts = np.column_stack([np.full(len(rest), x0), rest])
        orb = basis.orbitals(pts)
        wt = w0 * wrest
        M += orb.T @ (orb * (wt * weight2(pts))[:, None])
        if K is not None:
            K += orb.T @ (orb * (wt * kfun2(pts))[:, None])
    M = 0.5 * (M + M.T)
    if K is not None:
        K = 0.5 * (K + K.T)
    return M, K


def _default_order(basis: FermiSeaSpec) -> int:
    # per-mode refinement: enough nodes to resolve the highest orbital frequency
    return 2 * int(basis.modes.max()) + 8


def _refined_gram(basis, weight2, kfun2, quadrature: QuadratureSpec):
    order = quadrature.order or _default_order(basis)
    panels = quadrature.panels
    prev = _tensor_gram(basis, weight2, kfun2, order, panels)
    while True:
        panels *= 2
        cur = _tensor_gram(basis, weight2, kfun2, order, panels)
        diff = float(np.max(np.abs(cur[0] - prev[0])))
        if cur[1] is not None:
            diff = max(diff, float(np.max(np.abs(cur[1] - prev[1]))))
        if diff <= quadrature.tol:
            return cur
        if panels >= quadrature.max_panels:
            raise QuadratureError("overlap quadrature did not converge", diff)
        prev = cur


# -- weights ------------------------------------------------------------------

class JastrowWeight:
    """``h(x) = prod_j f(|x - y_j|)`` for a cut-off profile ``f``.

    ``1 - h^2`` is supported in the balls of radius ``R`` around the ``y_j``;
    when those balls are disjoint the overlap matrix reduces to a sum of
    ball-local integrals, which :func:`overlap_matrix` exploits.
    """

    def __init__(self, profile: CutoffProfile, points):
        self.profile = profile
        self.points = np.atleast_2d(np.asarray(points, dtype=float)) if len(points) else np.zeros((0, profile.dimension))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1])
        for y in self.points:
            out = out * self.profile.f(np.linalg.norm(x - y, axis=-1))
        return out

    def squared(self, x) -> np.ndarray:
        return self(x) ** 2

    @property
    def disjoint(self) -> bool:
        if len(self.points) < 2:
            return True
        diff = self.points[:, None, :] - self.points[None, :, :]
        dist = np.linalg.norm(diff, axis=-1) + np.diag(np.full(len(self.points), np.inf))
        return bool(dist.min() >= 2 * self.profile.R)


def ball_rule(radial_edges, dimension: int, n_radial: int = 16, n_polar: int = 24, n_azimuth: int = 48):
    """Product quadrature on a ball: Gauss radial panels times angular rule.

    Returns offsets (P, d), weights (P,) including the Jacobian, and the
    radius of each node.
    """
    edges = np.asarray(sorted(set(float(e) for e in radial_edges)))
    t, w = np.polynomial.legendre.leggauss(n_radial)
    rr, wr = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        rr.append(lo + 0.5 * (hi - lo) * (t + 1))
        wr.append(0.5 * (hi - lo) * w)
    rr, wr = np.concatenate(rr), np.concatenate(wr)
    phi = 2 * math.pi * np.arange(n_azimuth) / n_azimuth
    wphi = np.full(n_azimuth, 2 * math.pi / n_azimuth)
    if dimension == 2:
        dirs = np.column_stack([np.cos(phi), np.sin(phi)])
        wang = wphi
        jac = rr
    else:
        ct, wct = np.polynomial.legendre.leggauss(n_polar)
        st = np.sqrt(1 - ct**2)
        dirs = np.column_stack([
            (st[:, None] * np.cos(phi)[None, :]).ravel(),
            (st[:, None] * np.sin(phi)[None, :]).ravel(),
            np.repeat(ct, n_azimuth),
        ])
        wang = (wct[:, None] * wphi[None, :]).ravel()
        jac = rr**2
    offsets = (rr[:, None, None] * dirs[None, :, :]).reshape(-1, dimension)
    weights = (wr * jac)[:, None] * wang[None, :]
    radii = np.repeat(rr, len(wang))
    return offsets, weights.ravel(), radii


def _profile_edges(profile: CutoffProfile) -> list[float]:
    pot = profile.solution.potential
    edges = [0.0] + [b for b in pot.breakpoints() if b < profile.R] + [profile.R]
    return edges


def jastrow_deficit_matrix(basis: FermiSeaSpec, weight: JastrowWeight, **rule) -> np.ndarray:
    """``1 - M`` for a Jastrow weight with disjoint balls, by ball-local quadrature."""
    if not weight.disjoint:
        raise ValueError("ball-local quadrature needs balls of radius R to be disjoint")
    n = basis.n
    out = np.zeros((n, n))
    if len(weight.points) == 0:
        return out
    offsets, wts, radii = ball_rule(_profile_edges(weight.profile), basis.dimension, **rule)
    q = 1.0 - weight.profile.f(radii) ** 2
    keep = q != 0
    offsets, wts, q = offsets[keep], wts[keep], q[keep]
    ell = basis.ell
    for y in weight.points:
        pts = y + offsets
        inside = np.all((pts >= 0) & (pts <= ell), axis=1)
        orb = basis.orbitals(pts[inside])
        out += orb.T @ (orb * (wts[inside] * q[inside])[:, None])
    return 0.5 * (out + out.T)


def overlap_matrix(basis: FermiSeaSpec, weight, quadrature: QuadratureSpec | None = None) -> np.ndarray:
    """``M_ab = int phi_a phi_b |h|^2`` over the box.

    ``weight`` is either a :class:`JastrowWeight` (ball-local route) or any
    callable returning ``h`` at an ``(N, d)`` array of points.
    """
    if isinstance(weight, JastrowWeight) and weight.disjoint:
        return np.eye(basis.n) - jastrow_deficit_matrix(basis, weight)
    if isinstance(weight, (int, float)):
        c = float(weight)
        return c * c * np.eye(basis.n)
    M, _ = _refined_gram(basis, lambda x: np.abs(weight(x)) ** 2, None, quadrature or QuadratureSpec())
    return M


# -- Slater algebra -------------------------------------------------------------

def _guarded_inverse(M: np.ndarray) -> np.ndarray:
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularOverlap(cond, CONDITION_LIMIT)
    lu = np.linalg.inv(M)
    return 0.5 * (lu + lu.T)


@dataclass(eq=False)
class WeightedSlater:
    """Slater determinant of ``basis`` multiplied by ``prod_i h(x_i)``."""

    basis: FermiSeaSpec
    weight: Callable
    M: np.ndarray = field(default=None, repr=False)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        if self.M is None:
            self.M = overlap_matrix(self.basis, self.weight, self.quadrature)

    @property
    def inverse(self) -> np.ndarray:
        if not hasattr(self, "_inv"):
            self._inv = _guarded_inverse(self.M)
        return self._inv


def slater_norm(ws: WeightedSlater) -> float:
    """``<Phi|Phi> = det M``."""
    sign, logdet = np.linalg.slogdet(ws.M)
    return float(sign * math.exp(logdet)) if sign != 0 else 0.0


def k_particle_density(ws: WeightedSlater, points) -> float:
    """Normalized k-particle density at ``points`` (shape (k, d)).

    Carries the ``1/k!`` of the wedge convention, so it integrates to
    ``binom(n, k)``; the k = 1 case is the one-particle density.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k = pts.shape[0]
    if not 1 <= k <= ws.basis.n:
        raise ValueError("need 1 <= k <= n points")
    vec = ws.basis.orbitals(pts)
    gram = vec @ ws.inverse @ vec.T
    h2 = np.abs(ws.weight(pts)) ** 2 if callable(ws.weight) else np.full(k, float(ws.weight) ** 2)
    return float(np.prod(h2) * np.linalg.det(gram) / math.factorial(k))


def weighted_trace(basis: FermiSeaSpec, h, kfun, quadrature: QuadratureSpec | None = None) -> float:
    """``det M * Tr[K M^-1]`` with ``K`` the Gram matrix of ``|k|^2``."""
    q = quadrature or QuadratureSpec()
    M, K = _refined_gram(basis, lambda x: np.abs(h(x)) ** 2, lambda x: np.abs(kfun(x)) ** 2, q)
    inv = _guarded_inverse(M)
    sign, logdet = np.linalg.slogdet(M)
    return float(sign * math.exp(logdet) * np.trace(K @ inv))


# -- structural deviation bound -----------------------------------------------------

@dataclass(frozen=True)
class MDeviation:
    exact: float
    structural: float
    constant: float | None
    bound: float | None
    holds: bool | None


def structural_deviation(a: float, R: float, s: float, ell: float, n: int) -> float:
    """``a R^2 / s^3 + n^(2/3) s^2 / ell^2`` (no constant)."""
    return a * R**2 / s**3 + n ** (2.0 / 3.0) * s**2 / ell**2


def deviation_bound(a: float, R: float, s: float, ell: float, n: int,
                    constant: float = DEVIATION_CONSTANT) -> float:
    """Calibrated bound on ``||1 - M_Y||``."""
    return constant * structural_deviation(a, R, s, ell, n)


def check_separation(Y: np.ndarray, s: float) -> None:
    if len(Y) < 2:
        return
    diff = Y[:, None, :] - Y[None, :, :]
    dist = np.linalg.norm(diff, axis=-1) + np.diag(np.full(len(Y), np.inf))
    if dist.min() < s * (1 - 1e-12):
        raise ValueError(f"separation violated: min distance {dist.min():.6g} < s = {s:.6g}")


def m_deviation(basis: FermiSeaSpec, Y, profile: CutoffProfile, s: float,
                constant: float | None = None, **rule) -> MDeviation:
    """Exact ``||1 - M_Y||`` and the structural bound expression.

    ``Y`` must be pairwise separated by at least ``s >= 2R``.  The exact norm
    is the largest eigenvalue of the ball-local ``1 - M_Y``.
    """
    Y = np.asarray(Y, dtype=float).reshape(-1, basis.dimension)
    if s < 2 * profile.R * (1 - 1e-12):
        raise ValueError("separation violated: need s >= 2R")
    check_separation(Y, s)
    D = jastrow_deficit_matrix(basis, JastrowWeight(profile, Y), **rule)
    exact = float(np.linalg.eigvalsh(D)[-1]) if len(Y) else 0.0
    exact = max(exact, 0.0)
    structural = structural_deviation(profile.a, profile.R, s, basis.ell, basis.n)
    if constant is None:
        return MDeviation(exact, structural, None, None, None)
    bound = constant * structural
    return MDeviation(exact, structural, constant, bound, bool(exact <= bound))


def random_separated_points(count: int, ell: float, s: float, rng: np.random.Generator,
                            dimension: int = 3, margin: float = 0.0, max_tries: int = 100000) -> np.ndarray:
    """Random sequential addition of points in ``[margin, ell - margin]^d`` at mutual distance >= s."""
    pts: list[np.ndarray] = []
    tries = 0
    while len(pts) < count:
        if tries >= max_tries:
            raise RuntimeError(f"placed only {len(pts)} of {count} points")
        tries += 1
        p = rng.uniform(margin, ell - margin, size=dimension)
        if all(np.linalg.norm(p - q) >= s for q in pts):
            pts.append(p)
    return np.array(pts).reshape(-1, dimension)


@dataclass(frozen=True)
class CorrectionFactors:
    A: float
    B: float
    a: float
    R: float
    s: float
    ell: float
    n: int
    constant: float


def correction_factors(a: float, R: float, s: float, ell: float, n: int, C: float) -> CorrectionFactors:
    """``A_n = 1/(1 - C[aR^2/s^3 + n^(2/3)(s/l)^2])``, ``B_n = 1/(1 - C n^(8/3) A_n^2 (s/l)^5)``."""
    denom_a = 1.0 - C * structural_deviation(a, R, s, ell, n)
    if not denom_a > 0:
        raise ScheduleInfeasible(f"A_n denominator {denom_a:.6g} <= 0", "A_n", denom_a)
    A = 1.0 / denom_a
    denom_b = 1.0 - C * n ** (8.0 / 3.0) * A**2 * (s / ell) ** 5
    if not denom_b > 0:
        raise ScheduleInfeasible(f"B_n denominator {denom_b:.6g} <= 0", "B_n", denom_b)
    return CorrectionFactors(A, 1.0 / denom_b, a, R, s, ell, n, C)


# -- brute-force references --------------------------------------------------------

class CosineWeight:
    """Positive weight with ``h^2`` a cosine polynomial on ``[0, ell]^d``.

    ``h^2(x) = c_0 + sum_t c_t prod_a cos(pi j_ta x_a / ell)`` with
    ``c_0 > sum |c_t|``.  Frequencies are at most ``max_freq`` per axis.
    """

    def __init__(self, ell: float, dimension: int, freqs: np.ndarray, coeffs: np.ndarray, c0: float):
        self.ell = ell
        self.dimension = dimension
        self.freqs = np.asarray(freqs, dtype=int).reshape(-1, dimension)
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.c0 = float(c0)

    @classmethod
    def random(cls, rng: np.random.Generator, ell: float, dimension: int, max_freq: int = 1,
               terms: int = 3, floor: float = 0.05) -> "CosineWeight":
        freqs = rng.integers(0, max_freq + 1, size=(terms, dimension))
        coeffs = rng.uniform(-1, 1, size=terms)
        c0 = np.sum(np.abs(coeffs)) + floor + rng.uniform(0, 1)
        scale = 1.0 / (c0 + np.sum(np.abs(coeffs)))
        return cls(ell, dimension, freqs, coeffs * scale, c0 * scale)

    @property
    def max_freq(self) -> int:
        return int(self.freqs.max()) if self.freqs.size else 0

    def squared(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape[:-1], self.c0)
        for j, c in zip(self.freqs, self.coeffs):
            out = out + c * np.prod(np.cos(math.pi * j * x / self.ell), axis=-1)
        return out

    def __call__(self, x) -> np.ndarray:
        return np.sqrt(self.squared(x))


def _trapezoid_interior(ell: float, intervals: int):
    x = ell * np.arange(1, intervals) / intervals
    return x, np.full(x.size, ell / intervals)


def exact_intervals(basis: FermiSeaSpec, *weights) -> int:
    """Trapezoid intervals that integrate the brute-force integrands exactly."""
    top = 2 * int(basis.modes.max()) + max([w.max_freq for w in weights] + [0])
    return top // 2 + 1


def _grid(basis: FermiSeaSpec, intervals: int):
    x, w = _trapezoid_interior(basis.ell, intervals)
    d = basis.dimension
    pts = np.stack(np.meshgrid(*[x] * d, indexing="ij"), -1).reshape(-1, d)
    wts = np.prod(np.stack(np.meshgrid(*[w] * d, indexing="ij"), -1).reshape(-1, d), axis=1)
    return pts, wts


def _tuples(n_points: int, count: int, chunk: int = 200000):
    total = n_points**count
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        yield np.stack(np.unravel_index(flat, (n_points,) * count), axis=1)


def brute_force_moments(basis: FermiSeaSpec, weight: CosineWeight, fixed=None,
                        kweight: CosineWeight | None = None, intervals: int | None = None) -> dict:
    """Integrate ``|Phi|^2`` directly over every free coordinate.

    With ``fixed`` (k, d) the first k coordinates are pinned and the rest
    integrated; returns ``{"integral": ...}`` and, with ``kweight``, the
    sum over i of ``int |D|^2 |k(x_i)|^2 prod_{j != i} |h(x_j)|^2``.
    """
    n = basis.n
    ws = [weight] + ([kweight] if kweight is not None else [])
    N = intervals or exact_intervals(basis, *ws)
    pts, wts = _grid(basis, N)
    orb = basis.orbitals(pts)
    h2 = weight.squared(pts)
    k2 = kweight.squared(pts) if kweight is not None else None
    fixed = np.zeros((0, basis.dimension)) if fixed is None else np.atleast_2d(np.asarray(fixed, float))
    kfix = fixed.shape[0]
    free = n - kfix
    fixed_orb = basis.orbitals(fixed) if kfix else np.zeros((0, n))
    fixed_h2 = np.prod(weight.squared(fixed)) if kfix else 1.0
    norm_fact = 1.0 / math.factorial(n)
    integral = 0.0
    trace = 0.0
    if free == 0:
        det = np.linalg.det(fixed_orb)
        return {"integral": float(norm_fact * det**2 * fixed_h2), "intervals": N}
    for idx in _tuples(len(pts), free):
        rows = orb[idx]
        if kfix:
            rows = np.concatenate([np.broadcast_to(fixed_orb, (len(idx), kfix, n)), rows], axis=1)
        det2 = np.linalg.det(rows) ** 2
        w = np.prod(wts[idx], axis=1)
        hp = np.prod(h2[idx], axis=1)
        integral += float(np.sum(w * det2 * hp))
        if k2 is not None:
            ratio = np.sum(k2[idx] / h2[idx], axis=1)
            trace += float(np.sum(w * det2 * hp * ratio))
    out = {"integral": norm_fact * fixed_h2 * integral, "intervals": N}
    if k2 is not None:
        out["trace"] = norm_fact * trace
    return out


def brute_force_density(basis: FermiSeaSpec, weight: CosineWeight, points, norm: float | None = None,
                        intervals: int | None = None) -> float:
    """``binom(n, k) / <Phi|Phi> * int |Phi|^2`` over the unpinned coordinates."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k = pts.shape[0]
    if norm is None:
        norm = brute_force_moments(basis, weight, intervals=intervals)["integral"]
    part = brute_force_moments(basis, weight, fixed=pts, intervals=intervals)["integral"]
    return math.comb(basis.n, k) * part / norm


def closed_form_suite(n_weights: int = 20, seed: int = 42, tol: float = 1e-5, cases=None) -> list[dict]:
    """Compare every closed form against the brute-force references.

    Returns one record per (case, weight) with the worst relative error of
    norm, 1-/2-/3-particle densities and the trace identity.
    """
    rng = np.random.default_rng(seed)
    cases = cases or [(3, 2), (3, 3), (3, 4), (2, 4)]
    records = []
    for i in range(n_weights):
        dimension, n = cases[i % len(cases)]
        ell = float(rng.uniform(0.7, 1.6))
        basis = FermiSeaSpec(n, ell, dimension)
        h = CosineWeight.random(rng, ell, dimension, max_freq=1 + (i % 2))
        kw = CosineWeight.random(rng, ell, dimension, max_freq=1)
        exact_q = QuadratureSpec(order=4 * int(basis.modes.max()) + 8, tol=1e-12)
        ws = WeightedSlater(basis, h, quadrature=exact_q)
        ref = brute_force_moments(basis, h, kweight=kw)
        errs = {}
        errs["norm"] = abs(slater_norm(ws) - ref["integral"]) / abs(ref["integral"])
        trace = weighted_trace(basis, h, kw, exact_q)
        errs["trace"] = abs(trace - ref["trace"]) / abs(ref["trace"])
        for k in (1, 2, 3):
            if k > n:
                continue
            pts = rng.uniform(0.1 * ell, 0.9 * ell, size=(k, dimension))
            got = k_particle_density(ws, pts)
            want = brute_force_density(basis, h, pts, norm=ref["integral"])
            scale = max(abs(want), 1e-300)
            errs[f"density_{k}"] = abs(got - want) / scale
        worst = max(errs.values())
        records.append({"case": i, "dimension": dimension, "n": n, "ell": ell,
                        "errors": errs, "worst": worst, "passed": worst <= tol})
    return records




def tensor_overlap(basis: FermiSeaSpec, weight: Callable, order: int, panels: int) -> np.ndarray:
    """``M`` on one fixed composite Gauss-Legendre tensor rule (no refinement)."""
    M, _ = _tensor_gram(basis, lambda x: np.abs(weight(x)) ** 2, None, order, panels)
    return M


# -- deviation corpus ------------------------------------------------------------

@dataclass(frozen=True)
class DeviationCase:
    n: int
    ell: float
    potential_kind: str
    a: float
    R0: float
    R: float
    s: float
    points: np.ndarray = field(repr=False)


def _corpus_potential(rng: np.random.Generator, ell: float):
    from .potentials import RadialPotential

    R0 = float(rng.uniform(0.01, 0.05)) * ell
    if rng.random() < 0.5:
        return "hard_sphere", RadialPotential.hard_sphere(R0)
    v0 = float(rng.uniform(1.0, 50.0)) / R0**2
    return "square_barrier", RadialPotential.square_barrier(v0, R0)


def deviation_case(rng: np.random.Generator):
    """One random configuration: Fermi sea, potential, R, s and separated points."""
    from .scattering import solve_zero_energy, xi_profile

    ell = float(rng.uniform(0.8, 1.5))
    n = int(rng.integers(1, 31))
    kind, pot = _corpus_potential(rng, ell)
    sol = solve_zero_energy(pot, 3, 1e-10)
    R = pot.R0 * float(rng.uniform(1.2, 3.0))
    s = 2 * R * float(rng.uniform(1.0, 2.0))
    count = int(rng.integers(1, 9))
    Y = random_separated_points(count, ell, s, rng)
    case = DeviationCase(n, ell, kind, sol.a, pot.R0, R, s, Y)
    return case, xi_profile(sol, R)


def deviation_corpus(count: int, seed: int, constant: float | None = None) -> list[dict]:
    """Exact ``||1 - M_Y||`` against the structural expression on random cases."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(count):
        case, profile = deviation_case(rng)
        basis = FermiSeaSpec(case.n, case.ell, 3)
        rep = m_deviation(basis, case.points, profile, case.s, constant)
        rows.append({"case": i, "n": case.n, "ell": case.ell, "kind": case.potential_kind, "a": case.a,
                     "R": case.R, "s": case.s, "points": len(case.points), "exact": rep.exact,
                     "structural": rep.structural, "ratio": rep.exact / rep.structural,
                     "holds": rep.holds})
    return rows


def calibrate_deviation_constant(count: int = 200, seed: int = 0, margin: float = 1.25) -> float:
    """Largest exact/structural ratio over a calibration corpus, times ``margin``."""
    rows = deviation_corpus(count, seed)
    return margin * max(r["ratio"] for r in rows)
