"""Finite systems, models, the regulation pipeline, and possibilistic filtering."""

from .errors import ImpcatError, InvariantViolation, PreconditionError, SpecError

__version__ = "0.1.0"

__all__ = ["ImpcatError", "InvariantViolation", "PreconditionError", "SpecError", "__version__"]
