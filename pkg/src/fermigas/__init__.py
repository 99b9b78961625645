"""Numerics for the ground-state energy of the dilute Fermi gas.

Scattering-length solvers, Dirichlet Fermi-sea calculators, determinantal
densities, momentum-cutoff soft potentials with a Dyson-inequality checker,
and evaluators for explicit upper/lower energy bounds in 2D and 3D.

Units: hbar^2/2m = 1 throughout; energies carry units of 1/length^2.
"""

__version__ = "0.1.0"

from .potentials import RadialPotential, PotentialPiece, ValidationReport
from .scattering import ScatteringSolution, CutoffProfile, solve_zero_energy

__all__ = [
    "RadialPotential",
    "PotentialPiece",
    "ValidationReport",
    "ScatteringSolution",
    "CutoffProfile",
    "solve_zero_energy",
    "__version__",
]
