"""Lattice Boltzmann solver in diffusive scaling with a limit-consistency harness."""

from .consistency import (
    Case, ConsistencyReport, LimsupResult, convergence_study, lbe_residual, limsup_probe,
    make_case, read_report, stress_study, write_report,
)
from .equilibrium import MacroState, lattice_equilibrium, maxwellian_full, maxwellian_truncated
from .errors import (
    ConfigError, DegenerateDensityError, DimensionMismatchError, DomainError, FitError,
    InstabilityError, LimitLBMError,
)
from .grid import Grid, PopulationField, init_from_macro, make_grid, stream
from .lattice import Stencil, d2q9, d3q19, get_stencil, verify_quadrature
from .moments import macroscopic_moments, newtonian_target, stress_tensor
from .orders import eoc, fit_slope
from .scaling import ScalingParams, make_scaling, nondimensional_numbers
from .solver import collide, run_until, step

__version__ = "0.1.0"

__all__ = [
    "Case",
    "ConfigError",
    "ConsistencyReport",
    "DegenerateDensityError",
    "DimensionMismatchError",
    "DomainError",
    "FitError",
    "Grid",
    "InstabilityError",
    "LimitLBMError",
    "LimsupResult",
    "MacroState",
    "PopulationField",
    "ScalingParams",
    "Stencil",
    "collide",
    "convergence_study",
    "d2q9",
    "d3q19",
    "eoc",
    "fit_slope",
    "get_stencil",
    "init_from_macro",
    "lattice_equilibrium",
    "lbe_residual",
    "limsup_probe",
    "macroscopic_moments",
    "make_case",
    "make_grid",
    "make_scaling",
    "maxwellian_full",
    "maxwellian_truncated",
    "newtonian_target",
    "nondimensional_numbers",
    "read_report",
    "run_until",
    "step",
    "stream",
    "stress_study",
    "stress_tensor",
    "verify_quadrature",
    "write_report",
]
