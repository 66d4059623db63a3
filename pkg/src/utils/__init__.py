"""
Utility modules for the Choquard solver.
"""

from .config import get_settings, settings, is_production, is_development
from .logger import setup_logging, get_logger, logger, log_function_call, log_iteration, log_check
from .errors import (
    ChoquardError,
    ConfigError,
    ParameterError,
    RegimeError,
    HypothesisError,
    GeometryError,
    GridMismatchError,
    BoundaryDecayError,
    ResolutionError,
    SolverError,
    CollapseError,
    ConvergenceError,
    DiagnosticsError,
)

__all__ = [
    "get_settings",
    "settings",
    "is_production",
    "is_development",
    "setup_logging",
    "get_logger",
    "logger",
    "log_function_call",
    "log_iteration",
    "log_check",
    "ChoquardError",
    "ConfigError",
    "ParameterError",
    "RegimeError",
    "HypothesisError",
    "GeometryError",
    "GridMismatchError",
    "BoundaryDecayError",
    "ResolutionError",
    "SolverError",
    "CollapseError",
    "ConvergenceError",
    "DiagnosticsError",
]
