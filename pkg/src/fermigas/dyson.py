"""Numerical check of the momentum-cutoff Dyson inequality.

For a radial potential v of range R0, scattering length a and a cutoff kit
(h, f_R, w_R, U) the single-centre form reads

    int_{|x|<=R} |grad xi|^2 + 1/2 v |psi|^2
        >= (1 - eps) a int U |psi|^2 - (a / eps) int w_R |psi|^2       (3D)

with xi^ = chi psi^.  In 2D the coefficient of U is 1 and that of w_R is
(2 pi)^-1 int U / eps.  The field form sums the right side over separated
centres and uses the full kinetic energy int chi^2 p^2 |psi^|^2.

Test functions are sums of modulated Gaussians E times polynomial ramps that
vanish on each hard core: psi = E * prod_j tau_j.  Everything that involves E
alone is reduced to one-dimensional radial integrals because the angular
average of exp(r w.B) is known in closed form for complex B.  The remainder
c = E - psi lives in small balls around the cores and is integrated with local
spherical rules.  The discretisation error eta is the change of the gap
between two resolutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import ive

from .potentials import RadialPotential
from .soft_potential import SoftPotentialKit, ramp_profile

_SERIES_TERMS = 10


# ---------------------------------------------------------------------------
# closed-form sphere averages

def sphere_average(dimension: int, u, expo):
    """exp(expo) * int_{S^{d-1}} exp(u cos(angle)) d omega, for complex u with Re u >= 0."""
    u = np.asarray(u, dtype=complex)
    if dimension == 2:
        return 2.0 * math.pi * ive(0, u) * np.exp(expo + u.real)
    tiny = np.abs(u) < 1e-6
    ut = np.where(tiny, 1.0, u)
    # sinh(u)/u = exp(u) (1 - exp(-2u)) / (2u)
    ratio = np.where(tiny, np.exp(-u) * (1.0 + u * u / 6.0), -np.expm1(-2.0 * ut) / (2.0 * ut))
    return 4.0 * math.pi * np.exp(expo + u) * ratio


def sphere_first_moment(dimension: int, r, u, expo):
    """Q with int omega exp(r omega.B) d omega = Q * B, where u = r sqrt(B.B)."""
    u = np.asarray(u, dtype=complex)
    if dimension == 2:
        tiny = np.abs(u) < 1e-8
        ut = np.where(tiny, 1.0, u)
        ratio = np.where(tiny, 0.5 * np.exp(-u.real), ive(1, ut) / ut)
        return 2.0 * math.pi * r * ratio * np.exp(expo + u.real)
    small = np.abs(u) < 0.5
    ut = np.where(small, 1.0, u)
    # (u cosh u - sinh u) / u^3 = exp(u) (2u + (u + 1) expm1(-2u)) / (2 u^3)
    out = np.exp(expo + u) * (2.0 * ut + (ut + 1.0) * np.expm1(-2.0 * ut)) / (2.0 * ut**3)
    if small.any():
        idx = np.nonzero(small)
        w = u[idx] ** 2
        series = np.zeros_like(w)
        for k in range(_SERIES_TERMS, 0, -1):
            series = series * w + 2 * k / math.factorial(2 * k + 1)
        out[idx] = series * np.exp(np.broadcast_to(expo, u.shape)[idx])
    return 4.0 * math.pi * r * out


def _csqrt_dot(B):
    return np.sqrt(np.sum(B * B, axis=-1))


# ---------------------------------------------------------------------------
# test functions

def core_ramp(t):
    """Degree-7 smoothstep: 0 for t <= 0, 1 for t >= 1, C^3 at both ends."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t**4 * (35.0 - 84.0 * t + 70.0 * t**2 - 20.0 * t**3)


def core_ramp_slope(t):
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return 140.0 * t**3 * (1.0 - t) ** 3


@dataclass(frozen=True)
class GaussianTerm:
    """amplitude * exp(-gamma |x - centre|^2) * cos(k.(x - centre) + phase)."""

    amplitude: float
    gamma: float
    centre: tuple
    wavevector: tuple
    phase: float


@dataclass(frozen=True)
class CoreFactor:
    """Ramp that is 0 within ``radius`` of ``centre`` and 1 beyond ``radius + width``."""

    centre: tuple
    radius: float
    width: float

    @property
    def outer(self) -> float:
        return self.radius + self.width


@dataclass
class TestFunction:
    dimension: int
    terms: tuple
    cores: tuple = ()
    beta: np.ndarray = field(init=False, repr=False)
    gam: np.ndarray = field(init=False, repr=False)
    b: np.ndarray = field(init=False, repr=False)

    # complex form: E = sum_j beta_j exp(-gam_j |x|^2 + b_j . x)
    def __post_init__(self):
        beta, gam, b = [], [], []
        for t in self.terms:
            c = np.asarray(t.centre, dtype=float)
            k = np.asarray(t.wavevector, dtype=float)
            for sign in (1.0, -1.0):
                beta.append(0.5 * t.amplitude * np.exp(-t.gamma * c @ c + sign * 1j * (t.phase - k @ c)))
                gam.append(t.gamma)
                b.append(2.0 * t.gamma * c + sign * 1j * k)
        self.beta = np.array(beta)
        self.gam = np.array(gam, dtype=float)
        self.b = np.array(b)

    @property
    def core_centres(self) -> np.ndarray:
        return np.array([c.centre for c in self.cores], dtype=float).reshape(-1, self.dimension)

    def gaussian(self, x):
        x = np.asarray(x, dtype=float)
        expo = -np.einsum("...d,...d->...", x, x)[..., None] * self.gam + x @ self.b.T
        return np.real(np.exp(expo) @ self.beta)

    def gaussian_grad(self, x):
        x = np.asarray(x, dtype=float)
        expo = -np.einsum("...d,...d->...", x, x)[..., None] * self.gam + x @ self.b.T
        g = np.exp(expo) * self.beta
        lin = self.b - 2.0 * self.gam[:, None] * x[..., None, :]
        return np.real(np.einsum("...j,...jd->...d", g, lin))

    def ramp(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1])
        for c in self.cores:
            r = np.linalg.norm(x - np.asarray(c.centre), axis=-1)
            out = out * core_ramp((r - c.radius) / c.width)
        return out

    def ramp_grad(self, x):
        x = np.asarray(x, dtype=float)
        vals, grads = [], []
        for c in self.cores:
            diff = x - np.asarray(c.centre)
            r = np.linalg.norm(diff, axis=-1)
            t = (r - c.radius) / c.width
            unit = diff / np.where(r > 0, r, 1.0)[..., None]
            vals.append(core_ramp(t))
            grads.append((core_ramp_slope(t) / c.width)[..., None] * unit)
        total = np.zeros(x.shape)
        for i in range(len(vals)):
            prod = np.ones(x.shape[:-1])
            for j in range(len(vals)):
                if j != i:
                    prod = prod * vals[j]
            total += prod[..., None] * grads[i]
        return total

    def __call__(self, x):
        return self.gaussian(x) * self.ramp(x)

    def grad(self, x):
        E = self.gaussian(x)
        return self.gaussian_grad(x) * self.ramp(x)[..., None] + E[..., None] * self.ramp_grad(x)

    # --- closed forms for the Gaussian part
    def _pairs(self):
        lb = np.log(self.beta)
        return (lb[:, None] + lb[None, :], self.gam[:, None] + self.gam[None, :],
                self.b[:, None, :] + self.b[None, :, :])

    def gaussian_norm2(self) -> float:
        """int E^2."""
        lb, G, B = self._pairs()
        d = self.dimension
        Z = np.exp(lb + np.sum(B * B, axis=-1) / (4 * G)) * (math.pi / G) ** (d / 2)
        return float(np.real(Z.sum()))

    def gaussian_kinetic(self) -> float:
        """int |grad E|^2."""
        lb, G, B = self._pairs()
        d = self.dimension
        Z = np.exp(lb + np.sum(B * B, axis=-1) / (4 * G)) * (math.pi / G) ** (d / 2)
        mu = B / (2 * G[..., None])
        bj = self.b[:, None, :]
        bk = self.b[None, :, :]
        gj = self.gam[:, None]
        gk = self.gam[None, :]
        dot = lambda u, v: np.sum(u * v, axis=-1)
        moment = (dot(bj, bk) - 2 * gk * dot(bj, mu) - 2 * gj * dot(bk, mu)
                  + 4 * gj * gk * (dot(mu, mu) + d / (2 * G)))
        return float(np.real(np.sum(Z * moment)))

    def _pair_orbits(self):
        """One (j, k) per orbit under swap and conjugation, with orbit sizes."""
        n = len(self.beta)
        reps = {}
        for j in range(n):
            for k in range(n):
                key = min((j, k), (k, j), (j ^ 1, k ^ 1), (k ^ 1, j ^ 1))
                reps[key] = reps.get(key, 0) + 1
        idx = np.array(list(reps.keys()))
        return idx[:, 0], idx[:, 1], np.array(list(reps.values()), dtype=float)

    def radial_moment(self, centre, r, weights) -> float:
        """sum_i weights_i * int_{S} E(centre + r_i omega)^2 d omega."""
        y = np.asarray(centre, dtype=float)
        j, k, count = self._pair_orbits()
        lb = np.log(self.beta[j]) + np.log(self.beta[k])
        G = self.gam[j] + self.gam[k]
        B = self.b[j] + self.b[k]
        Bc = B - 2.0 * G[:, None] * y
        z = _csqrt_dot(Bc)[:, None]
        expo = (lb - G * (y @ y) + B @ y)[:, None] - G[:, None] * r**2
        ang = sphere_average(self.dimension, r * z, expo)
        return float(count @ np.real(ang @ weights))

    def _log_hat(self):
        d = self.dimension
        return np.log(self.beta) - d / 2 * np.log(2 * self.gam) + np.sum(self.b * self.b, axis=-1) / (4 * self.gam)

    def gaussian_hat(self, p_vec):
        """Fourier transform of the Gaussian part at momentum vectors."""
        lc = self._log_hat()
        expo = lc[None, :] + (2j * (p_vec @ self.b.T) - np.sum(p_vec**2, axis=1)[:, None]) / (4 * self.gam)
        return np.exp(expo).sum(axis=1)

    def band_transform(self, x, p, weights, gradient: bool = False):
        """(2 pi)^(-d/2) int M(|p|) E^(p) e^{-ipx} dp, with M folded into ``weights``.

        ``p`` and ``weights`` are a radial rule including p^(d-1).  Returns the
        value, or the gradient in x when ``gradient`` is set.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = self.dimension
        lc = self._log_hat()
        out = np.zeros(x.shape if gradient else x.shape[:1], dtype=complex)
        # terms come in conjugate pairs (even index = "+" member), so E^ e^{-ipx}
        # integrates to twice the real part of the "+" members
        for j in range(0, len(self.beta), 2):
            B = 1j * (self.b[j] / (2 * self.gam[j]) - x)
            z = _csqrt_dot(B)[:, None]
            expo = lc[j] - p**2 / (4 * self.gam[j])
            u = p * z
            if gradient:
                Q = sphere_first_moment(d, p, u, expo)
                out += (-1j) * ((Q * p) @ weights)[:, None] * B
            else:
                out += sphere_average(d, u, expo) @ weights
        return 2.0 * np.real(out) * (2 * math.pi) ** (-d / 2)

    def band_norm2(self, p, weights) -> float:
        """int M(|p|) |E^(p)|^2 dp with M folded into the radial ``weights``."""
        lc = self._log_hat()
        lcc = lc[:, None] + np.conj(lc)[None, :]
        inv = 1.0 / (4 * self.gam)
        B = 1j * (self.b[:, None, :] * (2 * inv[:, None, None])
                  - np.conj(self.b)[None, :, :] * (2 * inv[None, :, None]))
        z = _csqrt_dot(B)[..., None]
        expo = lcc[..., None] - (inv[:, None] + inv[None, :])[..., None] * p**2
        ang = sphere_average(self.dimension, p * z, expo)
        return float(np.real(np.sum(ang.sum(axis=(0, 1)) * weights)))

    @classmethod
    def random(cls, rng: np.random.Generator, dimension: int, s: float, cores=(),
               n_terms: int | None = None, spread: float = 1.0) -> "TestFunction":
        """Random modulated Gaussians of width ~s centred within ``spread * s`` of the origin."""
        n_terms = int(rng.integers(1, 4)) if n_terms is None else n_terms
        terms = []
        for _ in range(n_terms):
            sigma = s * rng.uniform(0.5, 2.0)
            direction = rng.normal(size=dimension)
            direction /= np.linalg.norm(direction)
            centre = direction * spread * s * rng.random()
            kdir = rng.normal(size=dimension)
            kdir /= np.linalg.norm(kdir)
            k = kdir * rng.uniform(0.0, 1.5) / sigma
            amp = rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 1.0)
            terms.append(GaussianTerm(amp, 1.0 / (2 * sigma**2), tuple(centre), tuple(k),
                                      rng.uniform(0, 2 * math.pi)))
        return cls(dimension, tuple(terms), tuple(cores))


# ---------------------------------------------------------------------------
# quadrature rules

@lru_cache(maxsize=64)
def _legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def _gauss(a: float, b: float, n: int):
    t, w = _legendre(n)
    return a + 0.5 * (b - a) * (t + 1), 0.5 * (b - a) * w


def radial_rule(edges, n: int):
    edges = sorted(set(float(e) for e in edges))
    r, w = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            x, y = _gauss(lo, hi, n)
            r.append(x)
            w.append(y)
    return np.concatenate(r), np.concatenate(w)


def sphere_rule(dimension: int, n_polar: int, n_azimuth: int):
    """Directions and weights on the unit sphere (sum = surface area)."""
    phi = 2 * math.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
    if dimension == 2:
        return np.stack([np.cos(phi), np.sin(phi)], -1), np.full(n_azimuth, 2 * math.pi / n_azimuth)
    ct, wt = _legendre(n_polar)
    st = np.sqrt(1 - ct**2)
    dirs = np.stack([np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)),
                     np.outer(ct, np.ones_like(phi))], -1).reshape(-1, 3)
    weights = np.outer(wt, np.full(n_azimuth, 2 * math.pi / n_azimuth)).ravel()
    return dirs, weights


def ball_rule(centre, edges, n_radial: int, dimension: int, n_polar: int, n_azimuth: int):
    r, wr = radial_rule(edges, n_radial)
    dirs, wd = sphere_rule(dimension, n_polar, n_azimuth)
    pts = np.asarray(centre, dtype=float) + (r[:, None, None] * dirs[None, :, :]).reshape(-1, dimension)
    weights = (wr * r ** (dimension - 1))[:, None] * wd[None, :]
    return pts, weights.ravel(), np.repeat(r, len(wd))


@dataclass(frozen=True)
class Resolution:
    """Node counts; ``scaled`` multiplies every count for the second level."""

    n_radial: int = 14
    n_polar: int = 8
    n_azimuth: int = 16
    n_momentum: int = 20
    n_core: int = 10
    core_polar: int = 8
    core_azimuth: int = 16
    coarse_radial: int = 8
    coarse_polar: int = 8
    coarse_azimuth: int = 16
    momentum_polar: int = 12
    momentum_azimuth: int = 24
    w_panels_per_s: int = 16

    def scaled(self, f: float) -> "Resolution":
        up = lambda n: int(math.ceil(n * f))
        return Resolution(*(up(getattr(self, k)) for k in self.__dataclass_fields__))


BASE_RESOLUTION = Resolution()
MOMENT_ORDER = 12
FIELD_MOMENT_ORDER = 10


# ---------------------------------------------------------------------------
# evaluation

class CoreSupportError(ValueError):
    """psi does not vanish on a hard core, so the potential energy is infinite."""


@dataclass
class DysonGap:
    gap: float
    eta: float
    lhs: float
    rhs: float
    scale: float
    terms: dict

    @property
    def holds(self) -> bool:
        return self.gap >= -self.eta

    def relative(self) -> float:
        return self.gap / self.scale if self.scale > 0 else 0.0


def _check_cores(psi: TestFunction, potential: RadialPotential, centres) -> None:
    rc = potential.hard_core_radius
    if rc <= 0:
        return
    for y in np.atleast_2d(centres):
        ok = any(np.linalg.norm(np.asarray(c.centre) - y) < 1e-12 and c.radius >= rc * (1 - 1e-12)
                 for c in psi.cores)
        if not ok:
            raise CoreSupportError(f"psi must vanish on the hard core of radius {rc} at {y.tolist()}")


def _momentum_rule(kit: SoftPotentialKit, n: int, multiplier: str):
    s = kit.s
    p, w = radial_rule([0.0, 1.0 / s, 2.0 / s], n)
    keep = 1.0 - ramp_profile(s * p)
    m = keep if multiplier == "h" else p**2 * keep * (2.0 - keep)
    return p, w * m * p ** (kit.dimension - 1)


def monomial_sphere_integral(gamma) -> float:
    """int_{S^{d-1}} omega^gamma d omega for a multi-index gamma."""
    gamma = np.asarray(gamma)
    if np.any(gamma % 2):
        return 0.0
    d = len(gamma)
    logs = sum(math.lgamma((g + 1) / 2) for g in gamma) - math.lgamma((gamma.sum() + d) / 2)
    return 2.0 * math.exp(logs)


@lru_cache(maxsize=16)
def _taylor_operator(dimension: int, s: float, order: int, n_momentum: int):
    """Matrix taking raw core moments to Taylor coefficients of F^-1[(1 - chi) c^] at 0.

    g(x) = sum_beta x^beta (T m)_beta with m_alpha = int c(y) y^alpha dy.
    """
    alphas = _multi_indices(dimension, order)
    p, w = radial_rule([0.0, 1.0 / s, 2.0 / s], n_momentum)
    weight = w * (1.0 - ramp_profile(s * p)) * p ** (dimension - 1)
    radial = [float(weight @ p**n) for n in range(2 * order + 1)]
    fact = lambda a: math.prod(math.factorial(k) for k in a)
    T = np.zeros((len(alphas), len(alphas)), dtype=complex)
    for i, beta in enumerate(alphas):
        for j, alpha in enumerate(alphas):
            gamma = np.add(alpha, beta)
            ang = monomial_sphere_integral(gamma)
            if ang == 0.0:
                continue
            phase = 1j ** sum(alpha) * (-1j) ** sum(beta)
            T[i, j] = phase * ang * radial[int(gamma.sum())] / (fact(alpha) * fact(beta))
    T *= (2 * math.pi) ** (-dimension)
    return alphas, np.real_if_close(T, tol=1e6)


def _power_table(x, alphas, order: int):
    A = np.asarray(alphas, dtype=np.int64).reshape(-1, x.shape[1])
    pows = np.empty(x.shape + (order + 1,))
    pows[..., 0] = 1.0
    for k in range(1, order + 1):
        pows[..., k] = pows[..., k - 1] * x
    return A, pows


def _monomials(x, alphas, order: int):
    """x^alpha for every multi-index; shape (npoints, nalphas)."""
    A, pows = _power_table(x, alphas, order)
    out = pows[:, 0, A[:, 0]]
    for a in range(1, x.shape[1]):
        out *= pows[:, a, A[:, a]]
    return out


@lru_cache(maxsize=8)
def _derivative_maps(alphas: tuple):
    """For each axis: (source index, target index of alpha - e_axis, alpha_axis)."""
    index = {a: i for i, a in enumerate(alphas)}
    maps = []
    for axis in range(len(alphas[0])):
        rows = [(i, index[a[:axis] + (a[axis] - 1,) + a[axis + 1:]], a[axis])
                for i, a in enumerate(alphas) if a[axis] > 0]
        src, dst, fac = (np.array(v) for v in zip(*rows))
        maps.append((src, dst, fac.astype(float)))
    return maps


def _polynomial_grad(x, alphas, coeffs, order: int):
    """Gradient of sum_alpha coeffs[alpha] x^alpha; shape (npoints, d)."""
    maps = _derivative_maps(tuple(tuple(int(k) for k in a) for a in alphas))
    C = np.zeros((len(alphas), len(maps)), dtype=np.result_type(coeffs, float))
    for axis, (src, dst, fac) in enumerate(maps):
        C[dst, axis] = fac * coeffs[src]
    return _monomials(x, alphas, order) @ C


def _potential_half(potential: RadialPotential, psi: TestFunction, centre, res: Resolution,
                    dimension: int) -> float:
    """int 1/2 v(x - centre) psi^2 over the soft part of the potential."""
    if not potential.has_tail:
        return 0.0
    edges = [e for e in potential.breakpoints() if e >= potential.hard_core_radius]
    edges = sorted(set([potential.hard_core_radius, potential.R0] + edges))
    pts, w, r = ball_rule(centre, edges, res.n_radial, dimension, res.n_polar, res.n_azimuth)
    v = potential.evaluate(r)
    return float(0.5 * np.sum(w * v * psi(pts) ** 2))


def _core_rule(psi: TestFunction, res: Resolution, dimension: int):
    rules = []
    for c in psi.cores:
        pts, w, r = ball_rule(c.centre, [0.0, c.radius, c.outer], res.n_core, dimension,
                              res.core_polar, res.core_azimuth)
        rules.append((c, pts, w))
    return rules


def _w_radial(kit: SoftPotentialKit, psi: TestFunction, centre, res: Resolution) -> float:
    """int w_R(|x - centre|) E(x)^2 by the closed-form angular average."""
    y = np.asarray(centre, dtype=float)
    reach = max(np.linalg.norm(np.asarray(t.centre) - y) + math.sqrt(20.0 / t.gamma) for t in psi.terms)
    width, r, weights = kit.w_R.shell_table(res.w_panels_per_s)
    n = min(len(r), 12 * max(4, int(math.ceil(reach / width))))
    return psi.radial_moment(y, r[:n], weights[:n])


def _rhs_terms(kit: SoftPotentialKit, psi: TestFunction, centres, res: Resolution, cores):
    """Per-centre sums of int U psi^2 and int w_R psi^2."""
    d = kit.dimension
    u_int = 0.0
    w_int = 0.0
    for y in centres:
        pts, wts, _ = ball_rule(y, [kit.U.R0, kit.R], res.n_radial, d, res.n_polar, res.n_azimuth)
        u_int += kit.U.height * float(np.sum(wts * psi(pts) ** 2))
        w_int += _w_radial(kit, psi, y, res)
        for _, cp, cw in cores:
            diff = psi(cp) ** 2 - psi.gaussian(cp) ** 2
            w_int += float(np.sum(cw * kit.w_R(np.linalg.norm(cp - y, axis=1)) * diff))
    return u_int, w_int


def _assemble(kit: SoftPotentialKit, eps: float, kinetic: float, potential_half: float,
              u_int: float, w_int: float, extra: dict) -> tuple[float, float, float, float, dict]:
    rhs_u = (1 - eps) * kit.u_weight * u_int
    rhs_w = kit.w_weight / eps * w_int
    lhs = kinetic + potential_half
    rhs = rhs_u - rhs_w
    scale = abs(kinetic) + abs(potential_half) + abs(rhs_u) + abs(rhs_w)
    terms = {"kinetic": kinetic, "potential_half": potential_half, "u_integral": u_int,
             "w_integral": w_int, **extra}
    return lhs - rhs, lhs, rhs, scale, terms


def _multi_indices(dimension: int, order: int):
    import itertools
    return [a for a in itertools.product(range(order + 1), repeat=dimension) if sum(a) <= order]


@lru_cache(maxsize=8)
def _momentum_sphere(dimension: int, s: float, n_momentum: int, n_polar: int, n_azimuth: int,
                     order: int, kind: str = "k2"):
    """Momentum nodes over the band, weights with the band multiplier, and p^alpha / alpha!.

    ``kind`` "h" weights by (1 - chi), "k2" by p^2 (1 - chi^2).
    """
    p, w = radial_rule([0.0, 1.0 / s, 2.0 / s], n_momentum)
    keep = 1.0 - ramp_profile(s * p)
    m = keep if kind == "h" else p**2 * keep * (2.0 - keep)
    pw = w * m * p ** (dimension - 1)
    dirs, wd = sphere_rule(dimension, n_polar, n_azimuth)
    p_vec = (p[:, None, None] * dirs[None]).reshape(-1, dimension)
    weights = (pw[:, None] * wd[None]).ravel()
    alphas = _multi_indices(dimension, order)
    fact = np.array([math.prod(math.factorial(k) for k in a) for a in alphas], dtype=float)
    basis = _monomials(p_vec, alphas, order) / fact
    phase = np.array([1j ** sum(a) for a in alphas])
    return p_vec, weights, alphas, basis, phase


def _band_taylor(kit: SoftPotentialKit, res: "Resolution", psi) -> np.ndarray:
    """Taylor coefficients at 0 of the low band part of the Gaussian part of psi."""
    d = kit.dimension
    p_vec, weights, _, basis, phase = _momentum_sphere(
        d, kit.s, res.n_momentum, res.momentum_polar, res.momentum_azimuth, MOMENT_ORDER, "h")
    v = weights * psi.gaussian_hat(p_vec)
    coeffs = (v.real @ basis + 1j * (v.imag @ basis)) * np.conj(phase)
    return np.real(coeffs) * (2 * math.pi) ** (-d / 2)


def _core_band_terms(kit: SoftPotentialKit, res: "Resolution", psi, cores, cvals_per_core):
    """Cross and square terms of int p^2 (1 - chi^2) |E^ - c^|^2 dp.

    c^ comes from local moments about each core centre; E^ is closed form.
    """
    d = kit.dimension
    p_vec, weights, alphas, basis, phase = _momentum_sphere(
        d, kit.s, res.n_momentum, res.momentum_polar, res.momentum_azimuth, FIELD_MOMENT_ORDER)
    total = np.zeros(len(p_vec), dtype=complex)
    for (core, pts, _), v in zip(cores, cvals_per_core):
        centre = np.asarray(core.centre)
        moments = v @ _monomials(pts - centre, alphas, FIELD_MOMENT_ORDER)
        m = moments * phase
        total += np.exp(1j * p_vec @ centre) * (basis @ m.real + 1j * (basis @ m.imag))
    total *= (2 * math.pi) ** (-d / 2)
    cross = float(weights @ np.real(np.conj(psi.gaussian_hat(p_vec)) * total))
    square = float(weights @ np.abs(total) ** 2)
    return cross, square


def _single_centre(psi, potential, kit, res: Resolution):
    d = kit.dimension
    R = kit.R
    edges = [0.0, R, kit.U.R0] + [e for e in potential.breakpoints() if e < R]
    for c in psi.cores:
        edges += [c.radius, c.outer]
    pts, wts, _ = ball_rule(np.zeros(d), [e for e in edges if e <= R], res.n_radial, d,
                            res.n_polar, res.n_azimuth)
    alphas = _multi_indices(d, MOMENT_ORDER)
    # low band part of psi as a polynomial on B_R: Gaussian part minus core part
    taylor = _band_taylor(kit, res, psi)
    cores = _core_rule(psi, res, d)
    if cores:
        _, T = _taylor_operator(d, kit.s, MOMENT_ORDER, res.n_momentum)
        src = np.concatenate([cp for _, cp, _ in cores])
        src_w = np.concatenate([cw for _, _, cw in cores])
        moments = (src_w * (psi.gaussian(src) - psi(src))) @ _monomials(src, alphas, MOMENT_ORDER)
        taylor = taylor - T @ moments
    high = psi.grad(pts) - _polynomial_grad(pts, alphas, taylor, MOMENT_ORDER)
    kinetic = float(np.sum(wts * np.sum(high**2, axis=1)))

    vhalf = _potential_half(potential, psi, np.zeros(d), res, d)
    u_int, w_int = _rhs_terms(kit, psi, [np.zeros(d)], res, cores)
    return kinetic, vhalf, u_int, w_int


def _field(psi, potential, kit, centres, res: Resolution):
    d = kit.dimension
    kinetic = psi.gaussian_kinetic()
    cores = _core_rule(psi, res, d)
    p2, pw2 = _momentum_rule(kit, res.n_momentum, "k2")
    removed = psi.band_norm2(p2, pw2)
    if cores:
        for _, cp, cw in cores:
            kinetic += float(np.sum(cw * (np.sum(psi.grad(cp) ** 2, axis=1)
                                          - np.sum(psi.gaussian_grad(cp) ** 2, axis=1))))
        cvals = [cw * (psi.gaussian(cp) - psi(cp)) for _, cp, cw in cores]
        cross, square = _core_band_terms(kit, res, psi, cores, cvals)
        removed += square - 2 * cross
    vhalf = sum(_potential_half(potential, psi, y, res, d) for y in centres)
    u_int, w_int = _rhs_terms(kit, psi, centres, res, cores)
    return kinetic - removed, vhalf, u_int, w_int, removed


def _two_level(fn, res: Resolution, refine: float):
    return fn(res), fn(res.scaled(refine))


def dyson_gap(psi: TestFunction, potential: RadialPotential, kit: SoftPotentialKit, eps: float,
              resolution: Resolution = BASE_RESOLUTION, refine: float = 1.5) -> DysonGap:
    """LHS - RHS of the single-centre inequality, with eta from two resolutions."""
    return dyson_gaps(psi, potential, kit, [eps], resolution, refine)[0]


def dyson_gaps(psi, potential, kit, eps_values, resolution: Resolution = BASE_RESOLUTION,
               refine: float = 1.5) -> list[DysonGap]:
    """Single-centre gaps for several eps sharing one set of integrals."""
    _validate(psi, kit, eps_values)
    _check_cores(psi, potential, np.zeros(kit.dimension))
    for c in psi.cores:
        if np.linalg.norm(c.centre) + c.outer > kit.R:
            raise ValueError("core factors must lie inside the ball of radius R")
    coarse, fine = _two_level(lambda r: _single_centre(psi, potential, kit, r), resolution, refine)
    return [_report(kit, e, coarse, fine, {}) for e in eps_values]


def dyson_field_gaps(psi, potential, kit, centres, eps_values, resolution: Resolution = BASE_RESOLUTION,
                     refine: float = 1.5) -> list[DysonGap]:
    """Field form over separated centres: full kinetic energy of chi psi^ plus all centres."""
    centres = np.atleast_2d(np.asarray(centres, dtype=float))
    _validate(psi, kit, eps_values)
    if len(centres) > 1:
        dist = np.linalg.norm(centres[:, None] - centres[None], axis=-1)
        np.fill_diagonal(dist, np.inf)
        if dist.min() < 2 * kit.R:
            raise ValueError("centres must be at least 2R apart")
    _check_cores(psi, potential, centres)
    coarse, fine = _two_level(lambda r: _field(psi, potential, kit, centres, r)[:4], resolution, refine)
    return [_report(kit, e, coarse, fine, {"centres": len(centres)}) for e in eps_values]


def _validate(psi, kit, eps_values):
    if psi.dimension != kit.dimension:
        raise ValueError("test function and kit dimensions differ")
    for e in eps_values:
        if not 0 < e <= 1:
            raise ValueError("eps must lie in (0, 1]")


def _report(kit, eps, coarse, fine, extra) -> DysonGap:
    g0, *_ = _assemble(kit, eps, *coarse, extra)
    gap, lhs, rhs, scale, terms = _assemble(kit, eps, *fine, extra)
    eta = abs(gap - g0) + 1e-13 * scale
    return DysonGap(gap, eta, lhs, rhs, scale, {**terms, "eps": eps})


# ---------------------------------------------------------------------------
# corpora

def hard_core_factors(potential: RadialPotential, centres, width: float) -> tuple:
    rc = potential.hard_core_radius
    if rc <= 0:
        return ()
    return tuple(CoreFactor(tuple(map(float, y)), rc, width) for y in np.atleast_2d(centres))


def gap_corpus(potential: RadialPotential, kit: SoftPotentialKit, count: int, seed: int,
               eps_values=(0.1, 0.5), field_centres: int = 0) -> list[DysonGap]:
    """Gaps for ``count`` seeded test functions; ``field_centres > 0`` selects the field form."""
    rng = np.random.default_rng(seed)
    d = kit.dimension
    width = 0.5 * (kit.R - potential.hard_core_radius) if potential.hard_core_radius > 0 else 0.0
    out = []
    for _ in range(count):
        if field_centres:
            centres = _separated_centres(rng, field_centres, kit.R, d)
            psi = TestFunction.random(rng, d, kit.s, hard_core_factors(potential, centres, width),
                                      spread=1.5)
            out.extend(dyson_field_gaps(psi, potential, kit, centres, eps_values))
        else:
            psi = TestFunction.random(rng, d, kit.s, hard_core_factors(potential, np.zeros(d), width))
            out.extend(dyson_gaps(psi, potential, kit, eps_values))
    return out


def _separated_centres(rng, count: int, R: float, dimension: int) -> np.ndarray:
    pts = [np.zeros(dimension)]
    while len(pts) < count:
        direction = rng.normal(size=dimension)
        direction /= np.linalg.norm(direction)
        y = pts[int(rng.integers(len(pts)))] + direction * R * rng.uniform(2.0, 3.0)
        if min(np.linalg.norm(y - q) for q in pts) >= 2 * R:
            pts.append(y)
    return np.array(pts)
