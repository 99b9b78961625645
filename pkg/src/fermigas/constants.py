"""Frozen calibration values and the table of unnamed bound constants."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

# ||1 - M_Y|| <= DEVIATION_CONSTANT * (a R^2 / s^3 + n^(2/3) (s / ell)^2), frozen from
# determinantal.calibrate_deviation_constant(count=200, seed=0, margin=1.25) = 0.33496
DEVIATION_CONSTANT = 0.335


@dataclass(frozen=True)
class BoundConstants:
    """One entry per error channel of the energy bounds; every unnamed constant defaults to 1."""

    # upper bound, 3D box chain
    finite_size: float = 1.0          # C n^(-1/3) on the Dirichlet kinetic energy
    cutoff_curvature: float = 1.0     # a R^2 / s^3
    jastrow_overlap: float = 1.0      # (n + m)^(2/3) (s / ell)^2
    range_ratio: float = 1.0          # a / R
    interaction_size: float = 1.0     # n^(-1/3) + m^(-1/3) inside the interaction bracket
    norm_loss: float = 1.0            # (n + m)^(8/3) (s / ell)^5
    jastrow_gradient: float = 1.0     # (C s / eps) (n + m)^2 / ell^3 [(n + m)^(2/3) (s / ell)^2]
    packing: float = 1.0              # rho^(5/3) R0 / ell
    # lower bound
    soft_remainder: float = 1.0       # C R^2 / (eps s^2)
    neighbour_count: float = 1.0      # C a rho^2 (R^3 rho)^(2/3)
    a_priori: float = 1.0             # C rho (a^3 rho)^(1/6) (1 + 1/delta) (...)
    # 2D upper
    log_coupling: float = 1.0         # multiplies the exact ln(R/a) correction
    norm_loss_2d: float = 1.0         # n R^2 rho
    # schedule knobs
    alpha_2d: float = 3.0             # R = rho^(-1/2) |ln(a^2 rho)|^(-alpha)
    feasibility: float = 0.5          # every bracketed channel must stay below this
    rate_margin: float = 1.25         # calibrated rate constant = margin * asymptotic ratio

    @classmethod
    def from_mapping(cls, data: dict) -> "BoundConstants":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown constants: {sorted(unknown)}")
        values = {}
        for key, value in data.items():
            value = float(value)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"constant {key!r} must be positive and finite, got {value}")
            values[key] = value
        return cls(**values)

    @classmethod
    def from_json(cls, path: str | Path) -> "BoundConstants":
        return cls.from_mapping(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_CONSTANTS = BoundConstants()
