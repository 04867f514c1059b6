# core/errors.py - Standardized Error Handling
"""
Simulator error hierarchy with structured logging and CLI exit-code mapping.

Every error logs itself on construction, carries a machine-readable code and
knows which process exit code the command-line runner should return.
"""

import logging
from contextlib import contextmanager
from enum import Enum, IntEnum
from typing import Any, Dict, Iterator, List, Optional

import numpy as np

logger = logging.getLogger(__name__)


class ErrorCode(str, Enum):
    """Standardized error codes for the simulator."""

    # Input errors
    INVALID_DIMENSION = "INVALID_DIMENSION"
    DOMAIN_ERROR = "DOMAIN_ERROR"
    CONFIG_ERROR = "CONFIG_ERROR"
    UNSUPPORTED_OPERATION = "UNSUPPORTED_OPERATION"

    # Numerical errors
    TRUNCATION_ERROR = "TRUNCATION_ERROR"
    RESOURCE_ERROR = "RESOURCE_ERROR"
    NON_CONVERGENCE = "NON_CONVERGENCE"
    INSTABILITY = "INSTABILITY"
    STEP_UNDERFLOW = "STEP_UNDERFLOW"
    TRACE_DRIFT = "TRACE_DRIFT"
    RARE_OUTCOME = "RARE_OUTCOME"
    GRID_ERROR = "GRID_ERROR"
    NUMERICAL_ERROR = "NUMERICAL_ERROR"


class ExitCode(IntEnum):
    """Process exit codes of the command-line runner."""

    SUCCESS = 0
    CONFIG_ERROR = 1
    NUMERICAL_FAILURE = 2


class SimulationError(Exception):
    """Base exception for all simulator errors.

    Provides structured error handling with logging and exit-code mapping.
    """

    def __init__(
        self,
        message: str,
        error_code: ErrorCode,
        exit_code: ExitCode = ExitCode.NUMERICAL_FAILURE,
        detail: Optional[str] = None,
        log_level: int = logging.ERROR,
        **context
    ):
        """Initialize simulator error.

        Args:
            message: Human-readable error message
            error_code: Standardized error code
            exit_code: Exit code the CLI returns for this error
            detail: Additional error details (for debugging)
            log_level: Logging level for this error
            **context: Additional context for logging
        """
        self.message = message
        self.error_code = error_code
        self.exit_code = exit_code
        self.detail = detail
        self.log_level = log_level
        self.context = context

        super().__init__(message)

        self._log_error()

    def _log_error(self) -> None:
        """Log the error with appropriate level and context."""
        log_data = {
            "error_code": self.error_code.value,
            "exit_code": int(self.exit_code),
            **{f"ctx_{key}": value for key, value in self.context.items()},
        }
        if self.detail:
            log_data["detail"] = self.detail

        logger.log(
            self.log_level,
            f"{self.error_code.value}: {self.message}",
            extra=log_data
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert error to a JSON-serializable dictionary."""
        result = {
            "error_code": self.error_code.value,
            "message": self.message,
            "detail": self.detail,
        }
        if self.context:
            result["context"] = {key: _jsonable(value) for key, value in self.context.items()}
        return result


def _jsonable(value: Any) -> Any:
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    return value


class DimensionError(SimulationError):
    """Invalid cutoff, mismatched dimensions or bad mode indices."""

    def __init__(self, message: str, detail: Optional[str] = None, **context):
        super().__init__(
            message=message,
            error_code=ErrorCode.INVALID_DIMENSION,
            detail=detail,
            log_level=logging.WARNING,
            **context
        )


class DomainError(SimulationError):
    """Argument outside the mathematical domain of an operation."""

    def __init__(self, message: str, detail: Optional[str] = None, **context):
        super().__init__(
            message=message,
            error_code=ErrorCode.DOMAIN_ERROR,
            detail=detail,
            log_level=logging.WARNING,
            **context
        )


class TruncationError(SimulationError):
    """Fock cutoff too small for the requested state."""

    def __init__(self, message: str, loss: float, tolerance: float, **context):
        self.loss = float(loss)
        self.tolerance = float(tolerance)
        super().__init__(
            message=f"{message} (truncation loss {self.loss:.3e} > tolerance {self.tolerance:.1e})",
            error_code=ErrorCode.TRUNCATION_ERROR,
            log_level=logging.WARNING,
            loss=self.loss,
            tolerance=self.tolerance,
            **context
        )


class ResourceError(SimulationError):
    """Requested Hilbert-space dimension exceeds the configured memory budget."""

    def __init__(self, message: str, dimension: int, budget: int, **context):
        super().__init__(
            message=f"{message} (dimension {dimension} exceeds budget {budget})",
            error_code=ErrorCode.RESOURCE_ERROR,
            dimension=dimension,
            budget=budget,
            **context
        )


class ConvergenceError(SimulationError):
    """Iterative solver did not reach its tolerance within budget."""

    def __init__(self, message: str, residual: float, **context):
        self.residual = float(residual)
        super().__init__(
            message=f"{message} (residual {self.residual:.3e})",
            error_code=ErrorCode.NON_CONVERGENCE,
            residual=self.residual,
            **context
        )


class InstabilityError(SimulationError):
    """Configuration has no stable steady state."""

    def __init__(self, message: str, detail: Optional[str] = None, **context):
        super().__init__(
            message=message,
            error_code=ErrorCode.INSTABILITY,
            detail=detail,
            **context
        )


class IntegrationError(SimulationError):
    """Time integration aborted (step underflow or trace drift)."""

    def __init__(self, message: str, error_code: ErrorCode = ErrorCode.STEP_UNDERFLOW, **context):
        super().__init__(
            message=message,
            error_code=error_code,
            **context
        )


class RareOutcomeError(SimulationError):
    """Homodyne outcome with probability density below the underflow threshold."""

    def __init__(self, message: str, density: float, **context):
        self.density = float(density)
        super().__init__(
            message=f"{message} (density {self.density:.3e})",
            error_code=ErrorCode.RARE_OUTCOME,
            log_level=logging.WARNING,
            density=self.density,
            **context
        )


class GridError(SimulationError):
    """Sampling grid does not cover the measured marginal."""

    def __init__(self, message: str, tail_mass: float, **context):
        self.tail_mass = float(tail_mass)
        super().__init__(
            message=f"{message} (tail mass {self.tail_mass:.3e})",
            error_code=ErrorCode.GRID_ERROR,
            tail_mass=self.tail_mass,
            **context
        )


class UnsupportedOperationError(SimulationError):
    """Operation deliberately not supported for the given arguments."""

    def __init__(self, message: str, **context):
        super().__init__(
            message=message,
            error_code=ErrorCode.UNSUPPORTED_OPERATION,
            log_level=logging.WARNING,
            **context
        )


class ConfigError(SimulationError):
    """Experiment configuration could not be read or validated."""

    def __init__(self, message: str, errors: Optional[List[str]] = None, **context):
        self.errors = list(errors or [])
        super().__init__(
            message=message,
            error_code=ErrorCode.CONFIG_ERROR,
            exit_code=ExitCode.CONFIG_ERROR,
            detail="; ".join(self.errors) or None,
            log_level=logging.WARNING,
            **context
        )


@contextmanager
def numerical_guard(operation: str) -> Iterator[None]:
    """Translate raw numpy/scipy failures into a SimulationError.

    Args:
        operation: Name of the guarded operation (for the error message)

    Raises:
        SimulationError: If a linear-algebra or floating-point failure escapes
    """
    try:
        yield
    except SimulationError:
        raise
    except (np.linalg.LinAlgError, FloatingPointError, OverflowError) as e:
        logger.error(f"{operation} failed: {type(e).__name__}: {e}", exc_info=True)
        raise SimulationError(
            message=f"{operation} failed",
            error_code=ErrorCode.NUMERICAL_ERROR,
            detail=str(e),
        ) from e
