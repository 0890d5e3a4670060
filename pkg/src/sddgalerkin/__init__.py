"""Spectral Galerkin simulation of reaction-diffusion equations with state-dependent delay."""

from .errors import (
    BlowUpError,
    DimensionError,
    HypothesisViolationError,
    InvalidConfigurationError,
    InvalidParameterError,
    NumericOverflowError,
    OrderingError,
    OutOfRangeError,
    SddError,
    UndefinedDistanceError,
    UnsupportedOracleError,
)
from .history import HistoryBuffer, InitialSegment, eval_delay, sample, segment_norms
from .integrator import SolverConfig, Trajectory, reference_method_of_steps, simulate, simulate_undelayed, step
from .model import CATALOG, DelaySpec, ModelSpec, derived_exponents, make_model, validate_hypotheses
from .spectral import Basis, Domain, build_basis, frac_norm, lq_norm, norms, project, synthesize

__version__ = "0.1.0"

__all__ = [
    "BlowUpError", "DimensionError", "HypothesisViolationError", "InvalidConfigurationError",
    "InvalidParameterError", "NumericOverflowError", "OrderingError", "OutOfRangeError", "SddError",
    "UndefinedDistanceError", "UnsupportedOracleError",
    "HistoryBuffer", "InitialSegment", "eval_delay", "sample", "segment_norms",
    "SolverConfig", "Trajectory", "reference_method_of_steps", "simulate", "simulate_undelayed", "step",
    "CATALOG", "DelaySpec", "ModelSpec", "derived_exponents", "make_model", "validate_hypotheses",
    "Basis", "Domain", "build_basis", "frac_norm", "lq_norm", "norms", "project", "synthesize",
]
