"""Pseudo-spectral solver for active scalar equations with De Giorgi diagnostics."""
from .grid import Grid
from .operators import MgParams, mg_symbol, perp_riesz_symbol, tij_from_symbol, zero_symbol
from .solver import SolverConfig, SolverState, run

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "MgParams",
    "SolverConfig",
    "SolverState",
    "mg_symbol",
    "perp_riesz_symbol",
    "run",
    "tij_from_symbol",
    "zero_symbol",
]
