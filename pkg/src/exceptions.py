"""
Standardized exception hierarchy for the radial chemotaxis simulator.

This module defines the exception hierarchy that provides:
- Clear categorization of errors (configuration, initial data, numerics, output)
- Structured error details for logging and debugging
- A direct mapping onto CLI exit codes

Exception Hierarchy:
    SimulationError (base)
    ├── ConfigurationError
    │   ├── ValidationError
    │   ├── ParseError
    │   └── ConstraintViolated
    ├── InitialDataError
    │   ├── NegativeInitialData
    │   ├── UnderresolvedEta
    │   └── GridMismatchError
    ├── NumericalError
    │   ├── StepRejected
    │   ├── DtUnderflow
    │   └── DomainError
    └── OutputError
"""

from typing import Any, Dict, List, Optional


class SimulationError(Exception):
    """
    Base exception for all simulator errors.

    Attributes:
        message: Human-readable error message
        details: Additional context about the error (parameters, offending values)

    Example:
        >>> raise SimulationError(
        ...     "Run failed",
        ...     details={"t": 0.25, "reason": "non-finite values"}
        ... )
    """

    exit_code: int = 2

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None) -> None:
        """
        Initialize the exception with a message and optional details.

        Args:
            message: Human-readable error message
            details: Optional dictionary containing additional error context
        """
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def __str__(self) -> str:
        """Return string representation of the exception."""
        if self.details:
            return f"{self.message} | Details: {self.details}"
        return self.message

    def __repr__(self) -> str:
        """Return detailed representation of the exception."""
        return f"{self.__class__.__name__}(message={self.message!r}, details={self.details!r})"


class ConfigurationError(SimulationError):
    """
    Configuration-related errors.

    Raised for invalid grid or model parameters, e.g. ``dim < 2``,
    ``cells < 16`` or a non-positive radius.

    Example:
        >>> raise ConfigurationError(
        ...     "cells must be at least 16",
        ...     details={"cells": 8}
        ... )
    """

    exit_code = 1


class ValidationError(ConfigurationError):
    """
    Run configuration failed validation.

    Every violated constraint is collected before raising, so
    ``details["violations"]`` holds the complete list of
    ``"<field>: <constraint>"`` messages rather than only the first one.
    """

    def __init__(self, message: str, violations: List[str],
                 details: Optional[Dict[str, Any]] = None) -> None:
        merged = dict(details or {})
        merged["violations"] = list(violations)
        super().__init__(message, merged)
        self.violations = list(violations)

    def __str__(self) -> str:
        """Return the message followed by one violation per line."""
        lines = [self.message] + [f"  - {item}" for item in self.violations]
        return "\n".join(lines)


class ParseError(ConfigurationError):
    """
    The configuration document could not be parsed.

    ``details`` carries ``line`` and ``column`` of the offending position
    when the underlying decoder reports one.
    """
    pass


class ConstraintViolated(ConfigurationError):
    """
    The comparison constant ell does not satisfy the lower bound required
    for a finite blowup-time bound.
    """
    pass


class InitialDataError(SimulationError):
    """
    Base class for problems with supplied or synthesized initial data.
    """

    exit_code = 1


class NegativeInitialData(InitialDataError):
    """
    An initial field has a negative sample.

    Example:
        >>> raise NegativeInitialData(
        ...     "u0 has negative samples",
        ...     details={"field": "u0", "min": -1e-9, "index": 3}
        ... )
    """
    pass


class UnderresolvedEta(InitialDataError):
    """
    The grid has too few cells inside B_eta to resolve the mollifier spike.
    """
    pass


class GridMismatchError(InitialDataError):
    """
    Structural error: fields live on different grids, have the wrong
    length, or contain non-finite values.
    """
    pass


class NumericalError(SimulationError):
    """
    Base class for errors raised by the time integrator and closed forms.
    """
    pass


class StepRejected(NumericalError):
    """
    A trial step produced NaN or a negativity beyond roundoff.

    This is a transient condition: the stepper halves dt and retries.
    """
    pass


class DtUnderflow(NumericalError):
    """
    The admissible step size fell below ``dt_min``.

    The run driver classifies this as a blowup indication or an
    inconclusive termination depending on sup-norm escalation.
    """

    def __init__(self, message: str, dt: float, details: Optional[Dict[str, Any]] = None) -> None:
        merged = dict(details or {})
        merged.setdefault("dt", dt)
        super().__init__(message, merged)
        self.dt = dt


class DomainError(NumericalError):
    """
    A closed-form evaluator was called outside its domain (e.g. ``s < 1``).
    """

    exit_code = 1


class OutputError(SimulationError):
    """
    Writing diagnostics, reports or plots failed.

    Example:
        >>> raise OutputError(
        ...     "Could not write series.csv",
        ...     details={"path": "/tmp/run/series.csv", "error": "Permission denied"}
        ... )
    """

    exit_code = 3
