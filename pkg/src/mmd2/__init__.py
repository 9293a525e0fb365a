"""Stationary analysis, simulation and load sweeps for a two-server queue
whose service times share Marshall-Olkin common shocks."""

from .analytic import (
    ClosedFormSolution,
    Moments,
    ReferenceMM2,
    mm2_het_reference,
    mm2_hom_moments,
    moments,
    solve_bulk,
    solve_het,
    solve_hom,
    stability,
    tail_root,
)
from .chain import GeneratorMatrix, ModelParams, build_bulk, build_het, build_hom, solve_truncated
from .errors import ConfigError, DomainError, MisuseError, MMD2Error, NumericalError
from .mo_bve import MOParams, derived_properties, sample, survival

__version__ = "0.1.0"
