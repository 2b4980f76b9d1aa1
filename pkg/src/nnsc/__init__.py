"""Non-negative sparse coding."""

from .densemat import Matrix
from .model import Factorization, Mode, Problem, objective_nmf, objective_nnsc, validate
from .solver import SolverConfig, Trace, nmf_fit, nnsc_fit, update_a_projected, update_s

__all__ = [
    "Matrix",
    "Factorization",
    "Mode",
    "Problem",
    "objective_nmf",
    "objective_nnsc",
    "validate",
    "SolverConfig",
    "Trace",
    "nmf_fit",
    "nnsc_fit",
    "update_a_projected",
    "update_s",
]

__version__ = "0.1.0"
