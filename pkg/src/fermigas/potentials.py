"""Positive, finite-range radial pair potentials with an optional hard core.

A potential is a hard-core radius plus a piecewise tail on ``[r_lo, r_hi]``
intervals.  Each piece is either a constant or a table interpolated
linearly; interpolation error of tabulated tails is the caller's
responsibility.  Inside the core the potential is ``math.inf``; beyond the
range ``R0`` it is zero.

Lengths share one arbitrary unit and energies are in 1/length^2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

INFINITY = math.inf


@dataclass(frozen=True)
class PotentialPiece:
    """One segment of a radial tail, either constant or tabulated."""

    r_lo: float
    r_hi: float
    kind: str = "const"
    value: float | None = None
    points: tuple[tuple[float, float], ...] | None = None

    def evaluate(self, r: np.ndarray) -> np.ndarray:
        if self.kind == "const":
            return np.full(np.shape(r), float(self.value))
        xs = np.array([p[0] for p in self.points], dtype=float)
        ys = np.array([p[1] for p in self.points], dtype=float)
        return np.interp(r, xs, ys)

    def to_dict(self) -> dict:
        d = {"r_lo": self.r_lo, "r_hi": self.r_hi, "kind": self.kind}
        if self.kind == "const":
            d["value"] = self.value
        else:
            d["points"] = [list(p) for p in self.points]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialPiece":
        kind = d.get("kind", "const")
        if kind not in ("const", "table"):
            raise ValueError(f"pieces.kind: unknown kind {kind!r}")
        if kind == "const":
            return cls(float(d["r_lo"]), float(d["r_hi"]), "const", float(d["value"]))
        pts = tuple((float(a), float(b)) for a, b in d["points"])
        return cls(float(d["r_lo"]), float(d["r_hi"]), "table", None, pts)


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    failures: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.passed


@dataclass(frozen=True)
class RadialPotential:
    """Radial pair potential ``v(r)`` in units where hbar^2/2m = 1.

    Parameters
    ----------
    label : str
        Free-form name, echoed in reports.
    hard_core_radius : float
        Radius of the impenetrable core (0 for none).
    R0 : float
        Range; ``v(r) = 0`` for ``r > R0``.
    pieces : tuple of PotentialPiece
        Tail definition on ``r >= hard_core_radius``.  Points not covered
        by any piece evaluate to zero.
    """

    label: str
    hard_core_radius: float
    R0: float
    pieces: tuple[PotentialPiece, ...] = field(default_factory=tuple)

    # -- construction helpers ------------------------------------------------
    @classmethod
    def hard_sphere(cls, radius: float, label: str = "hard sphere") -> "RadialPotential":
        return cls(label, float(radius), float(radius), ())

    @classmethod
    def square_barrier(cls, v0: float, R0: float, label: str = "square barrier") -> "RadialPotential":
        return cls(label, 0.0, float(R0), (PotentialPiece(0.0, float(R0), "const", float(v0)),))

    @classmethod
    def zero(cls, R0: float = 1.0, label: str = "zero") -> "RadialPotential":
        return cls(label, 0.0, float(R0), ())

    @classmethod
    def tabulated(cls, r: Sequence[float], v: Sequence[float], hard_core_radius: float = 0.0,
                  label: str = "tabulated") -> "RadialPotential":
        r = [float(x) for x in r]
        piece = PotentialPiece(r[0], r[-1], "table", None, tuple(zip(r, (float(x) for x in v))))
        return cls(label, float(hard_core_radius), r[-1], (piece,))

    # -- evaluation ----------------------------------------------------------
    def evaluate(self, r):
        """Potential at radius ``r`` (scalar or array); ``inf`` inside the core."""
        arr = np.asarray(r, dtype=float)
        if np.any(arr < 0) or np.any(np.isnan(arr)):
            raise ValueError("radius must be non-negative")
        out = np.zeros(arr.shape)
        filled = np.zeros(arr.shape, dtype=bool)
        inside = arr <= self.R0
        for piece in self.pieces:
            m = inside & ~filled & (arr >= piece.r_lo) & (arr <= piece.r_hi)
            if np.any(m):
                out[m] = piece.evaluate(arr[m])
                filled |= m
        out[arr < self.hard_core_radius] = INFINITY
        if out.ndim == 0:
            return float(out)
        return out

    __call__ = evaluate

    @property
    def is_zero(self) -> bool:
        if self.hard_core_radius > 0:
            return False
        for p in self.pieces:
            if p.kind == "const" and p.value != 0 and p.r_hi > p.r_lo:
                return False
            if p.kind == "table" and any(v != 0 for _, v in p.points):
                return False
        return True

    @property
    def has_tail(self) -> bool:
        """True if a finite nonzero part exists outside the hard core."""
        tail_only = RadialPotential(self.label, 0.0, self.R0, self.pieces)
        if tail_only.is_zero:
            return False
        return any(p.r_hi > self.hard_core_radius for p in self.pieces)

    @property
    def is_pure_hard_core(self) -> bool:
        return self.hard_core_radius > 0 and not self.has_tail

    def breakpoints(self) -> list[float]:
        """Sorted radii where the tail may be non-smooth, within [core, R0]."""
        pts = {self.hard_core_radius, self.R0}
        for p in self.pieces:
            pts.update((p.r_lo, p.r_hi))
            if p.kind == "table":
                pts.update(x for x, _ in p.points)
        return sorted(x for x in pts if self.hard_core_radius <= x <= self.R0)

    def scaled(self, lam: float) -> "RadialPotential":
        """Potential with every length multiplied by ``lam``.

        Energies scale as 1/length^2, so tail values pick up ``lam**-2``;
        the scattering length of the result is ``lam`` times the original.
        """
        pieces = []
        for p in self.pieces:
            if p.kind == "const":
                pieces.append(PotentialPiece(p.r_lo * lam, p.r_hi * lam, "const", p.value / lam**2))
            else:
                pts = tuple((x * lam, y / lam**2) for x, y in p.points)
                pieces.append(PotentialPiece(p.r_lo * lam, p.r_hi * lam, "table", None, pts))
        return RadialPotential(self.label, self.hard_core_radius * lam, self.R0 * lam, tuple(pieces))

    def with_strength(self, factor: float) -> "RadialPotential":
        """Tail multiplied by ``factor`` (the core is left alone)."""
        pieces = []
        for p in self.pieces:
            if p.kind == "const":
                pieces.append(PotentialPiece(p.r_lo, p.r_hi, "const", p.value * factor))
            else:
                pieces.append(PotentialPiece(p.r_lo, p.r_hi, "table", None,
                                             tuple((x, y * factor) for x, y in p.points)))
        return RadialPotential(self.label, self.hard_core_radius, self.R0, tuple(pieces))

    # -- validation ----------------------------------------------------------
    def validate(self) -> ValidationReport:
        return validate(self)

    # -- serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "hard_core_radius": self.hard_core_radius,
            "R0": self.R0,
            "pieces": [p.to_dict() for p in self.pieces],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RadialPotential":
        for key in ("hard_core_radius", "R0"):
            if key not in d:
                raise ValueError(f"potential.{key}: missing")
        pieces = tuple(PotentialPiece.from_dict(p) for p in d.get("pieces", []))
        return cls(str(d.get("label", "")), float(d["hard_core_radius"]), float(d["R0"]), pieces)

    @classmethod
    def load(cls, path: str | Path) -> "RadialPotential":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def validate(potential: RadialPotential) -> ValidationReport:
    """Check positivity, range ordering and table grids.

    Never raises; all problems are collected into the report.
    """
    failures: list[str] = []
    p = potential
    if not (p.hard_core_radius >= 0) or not math.isfinite(p.hard_core_radius):
        failures.append("range: hard_core_radius must be finite and >= 0")
    if not (p.R0 >= 0) or not math.isfinite(p.R0):
        failures.append("range: R0 must be finite and >= 0")
    if p.R0 < p.hard_core_radius:
        failures.append("range ordering: R0 < hard_core_radius")
    for i, piece in enumerate(p.pieces):
        if piece.r_hi < piece.r_lo:
            failures.append(f"range: piece {i} has r_hi < r_lo")
        if piece.r_hi > p.R0 + 1e-15 * max(1.0, p.R0):
            failures.append(f"range: piece {i} extends beyond R0")
        if piece.r_lo < 0:
            failures.append(f"range: piece {i} starts at negative radius")
        if piece.kind == "const":
            if piece.value is None or not math.isfinite(piece.value):
                failures.append(f"positivity: piece {i} value is not finite")
            elif piece.value < 0:
                failures.append(f"positivity: piece {i} value {piece.value} < 0")
        elif piece.kind == "table":
            xs = np.array([q[0] for q in piece.points or ()], dtype=float)
            ys = np.array([q[1] for q in piece.points or ()], dtype=float)
            if xs.size < 2:
                failures.append(f"grid: piece {i} table needs at least two points")
            elif np.any(np.diff(xs) <= 0):
                failures.append(f"grid: piece {i} table radii not strictly increasing")
            if ys.size and (np.any(ys < 0) or not np.all(np.isfinite(ys))):
                failures.append(f"positivity: piece {i} table has negative or non-finite values")
            if xs.size and (xs[0] > piece.r_lo or xs[-1] < piece.r_hi):
                failures.append(f"grid: piece {i} table does not cover [r_lo, r_hi]")
        else:
            failures.append(f"kind: piece {i} has unknown kind {piece.kind!r}")
    return ValidationReport(not failures, tuple(failures))


def scattering_fixtures() -> dict[str, RadialPotential]:
    """A few standard potentials used by the CLI demos and tests."""
    return {
        "hard_sphere": RadialPotential.hard_sphere(1.0),
        "square_barrier": RadialPotential.square_barrier(10.0, 1.0),
        "core_with_shoulder": RadialPotential(
            "core+shoulder", 0.5, 1.0, (PotentialPiece(0.5, 1.0, "const", 4.0),)),
    }


def triangle(height: float, R0: float, label: str = "triangle") -> RadialPotential:
    """Linear ramp from ``height`` at r=0 down to 0 at ``R0``."""
    return RadialPotential.tabulated([0.0, R0], [height, 0.0], label=label)


def smooth_bump(height: float, R0: float, n: int = 65, label: str = "bump") -> RadialPotential:
    """Tabulated ``height * (1 - (r/R0)^2)^2`` profile."""
    r = np.linspace(0.0, R0, n)
    return RadialPotential.tabulated(r, height * (1 - (r / R0) ** 2) ** 2, label=label)

