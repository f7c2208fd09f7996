"""Concentration functions of random sums: estimators, limit laws and bounds."""

from __future__ import annotations

from .bounds import CONSTANTS, THEOREM_IDS, BoundValue
from .concentration import (
    AtomicLaw,
    ConcentrationCurve,
    SortedSample,
    q_exact_lattice,
    q_hat_closed,
    q_hat_halfopen,
    sup_deviation,
)
from .counting import make_counting, make_mixing
from .dists import SummandVector, make_summand
from .errors import ConfigError, ConvergenceError, DomainError, MomentDivergenceError
from .harness import BoundReport, ExperimentConfig, run_verification
from .kernels import BACKEND
from .limits import LimitLaw

__version__ = "0.1.0"

__all__ = [
    "AtomicLaw", "BACKEND", "BoundReport", "BoundValue", "CONSTANTS", "ConcentrationCurve",
    "ConfigError", "ConvergenceError", "DomainError", "ExperimentConfig", "LimitLaw",
    "MomentDivergenceError", "SortedSample", "SummandVector", "THEOREM_IDS", "make_counting",
    "make_mixing", "make_summand", "q_exact_lattice", "q_hat_closed", "q_hat_halfopen",
    "run_verification", "sup_deviation",
]
