"""Hitting-time densities for diffusions with backward-heat (Cole-Hopf) drifts."""
from .brownian_fpt import MovingBoundary, SeriesParams
from .errors import DomainError, FptError, NumericalError, PreconditionError, TruncationError
from .fpt_transform import FptDensity, ProcessSpec, bounded_fpt_density, cdf, unbounded_fpt_density
from .heat_solutions import HeatSolution, Kind, make_catalog_solution
from .montecarlo import SimConfig, SimResult, simulate_paths

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "FptDensity",
    "FptError",
    "HeatSolution",
    "Kind",
    "MovingBoundary",
    "NumericalError",
    "PreconditionError",
    "ProcessSpec",
    "SeriesParams",
    "SimConfig",
    "SimResult",
    "TruncationError",
    "bounded_fpt_density",
    "cdf",
    "make_catalog_solution",
    "simulate_paths",
    "unbounded_fpt_density",
]
