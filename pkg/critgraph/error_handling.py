"""
Error Handling Module - error management for the simulation laboratory.

Every failure raised by the library is a ``LabError`` carrying the message, an
error category, a context dictionary with the offending parameters, and a short
list of recovery suggestions. Validation failures also subclass ``ValueError``
so callers that only know the standard library can still catch them.
"""

from __future__ import annotations

import logging
import traceback
from datetime import datetime
from typing import Any, Dict, List, Optional


class LabError(Exception):
    """
    Base exception class for all laboratory errors.

    Provides:
    - Error type and message
    - Contextual information (parameters that triggered the failure)
    - Recovery suggestions
    - Stack trace of the wrapped exception, if any
    """

    def __init__(self,
                 message: str,
                 error_type: str = "generic",
                 context: Optional[Dict[str, Any]] = None,
                 recovery_suggestions: Optional[List[str]] = None,
                 original_exception: Optional[BaseException] = None):
        """
        Initialize a LabError.

        Args:
            message: Error message describing what went wrong
            error_type: Category of error (e.g. 'validation', 'regime', 'quadrature')
            context: Additional context about the error
            recovery_suggestions: List of suggestions for recovery
            original_exception: Original exception that caused this error
        """
        self.message = message
        self.error_type = error_type
        self.context = context or {}
        self.recovery_suggestions = recovery_suggestions or []
        self.original_exception = original_exception
        self.error_info = self._generate_error_info()
        super().__init__(message)

    def _generate_error_info(self) -> Dict[str, Any]:
        error_info = {
            'message': self.message,
            'type': self.error_type,
            'context': self.context,
            'recovery_suggestions': self.recovery_suggestions,
            'timestamp': datetime.now().isoformat(),
        }
        if self.original_exception:
            error_info['original_error'] = {
                'type': type(self.original_exception).__name__,
                'message': str(self.original_exception),
                'stack_trace': ''.join(traceback.format_tb(self.original_exception.__traceback__)),
            }
        return error_info

    def format_report(self) -> str:
        """Multi-line report with context and suggestions, for logs."""
        lines = [
            f"=== {self.error_type.upper()} ERROR ===",
            f"Message: {self.message}",
            f"Timestamp: {self.error_info['timestamp']}",
        ]
        if self.context:
            lines.append("Context:")
            for key, value in self.context.items():
                lines.append(f"  {key}: {value}")
        if self.recovery_suggestions:
            lines.append("Recovery Suggestions:")
            for i, suggestion in enumerate(self.recovery_suggestions, 1):
                lines.append(f"  {i}. {suggestion}")
        if self.original_exception:
            lines.append(f"Original Error: {type(self.original_exception).__name__}")
            lines.append(f"Original Message: {self.original_exception}")
        return '\n'.join(lines)

    def one_line(self) -> str:
        """Single-line diagnostic used by the CLI error stream."""
        if not self.context:
            return f"{self.error_type}: {self.message}"
        ctx = ', '.join(f"{k}={v}" for k, v in self.context.items())
        return f"{self.error_type}: {self.message} ({ctx})"

    def get_error_info(self) -> Dict[str, Any]:
        return self.error_info.copy()

    def log_error(self, logger: Optional[logging.Logger] = None) -> None:
        (logger or logging.getLogger(__name__)).error(self.format_report())

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(message='{self.message}', type='{self.error_type}')"


class LabValidationError(LabError, ValueError):
    """
    Exception for invalid parameters or inputs.

    Raised by every operation whose precondition fails (odd half-edge totals,
    empty sequences, probabilities outside [0, 1], zero p-tree masses, ...).
    """

    def __init__(self,
                 message: str,
                 context: Optional[Dict[str, Any]] = None,
                 original_exception: Optional[BaseException] = None):
        recovery_suggestions = [
            "Check the parameter against the operation's preconditions",
            "Validate data types and ranges before calling",
        ]
        super().__init__(
            message=message,
            error_type="validation",
            context=context,
            recovery_suggestions=recovery_suggestions,
            original_exception=original_exception,
        )


class RegimeError(LabValidationError):
    """Raised when tau or lambda fall outside the supported scaling regimes."""

    def __init__(self, message: str, tau: Optional[float] = None,
                 context: Optional[Dict[str, Any]] = None):
        ctx = dict(context or {})
        if tau is not None:
            ctx['tau'] = tau
        super().__init__(message=message, context=ctx)
        self.error_type = "regime"
        self.recovery_suggestions = [
            "Use tau in (2, 3) or (3, 4); tau = 3 has no scaling regime here",
            "For tau in (2, 3) the window parameter lambda must be positive",
        ]
        self.error_info = self._generate_error_info()


class LabConfigError(LabError):
    """
    Exception for configuration-related errors.

    Used when a settings file or an experiment spec is unreadable or invalid.
    """

    def __init__(self,
                 message: str,
                 context: Optional[Dict[str, Any]] = None,
                 original_exception: Optional[BaseException] = None):
        recovery_suggestions = [
            "Check the configuration file for syntax errors",
            "Verify all required keys are present and no unknown keys are used",
            "Validate configuration values against expected types",
        ]
        super().__init__(
            message=message,
            error_type="configuration",
            context=context,
            recovery_suggestions=recovery_suggestions,
            original_exception=original_exception,
        )


class SamplingExhaustedError(LabError):
    """Raised when rejection sampling runs out of attempts."""

    def __init__(self, message: str, attempts: int,
                 context: Optional[Dict[str, Any]] = None):
        ctx = dict(context or {})
        ctx['attempts'] = attempts
        super().__init__(
            message=message,
            error_type="sampling",
            context=ctx,
            recovery_suggestions=[
                f"Increase max_tries (current attempts: {attempts})",
                "Check that the degree sequence admits a simple realization",
            ],
        )
        self.attempts = attempts


class QuadratureError(LabError):
    """Raised when adaptive quadrature cannot reach the requested tolerance."""

    def __init__(self, message: str, achieved_error: float,
                 context: Optional[Dict[str, Any]] = None):
        ctx = dict(context or {})
        ctx['achieved_error'] = achieved_error
        super().__init__(
            message=message,
            error_type="quadrature",
            context=ctx,
            recovery_suggestions=[
                "Loosen the relative tolerance",
                "Raise the subdivision limit",
            ],
        )
        self.achieved_error = achieved_error


class IncompleteWalkError(LabValidationError):
    """Raised when an exploration walk does not end at -2 * (number of components)."""


class ExperimentError(LabError):
    """Raised for harness-level failures (spec hashing, result writing)."""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None,
                 original_exception: Optional[BaseException] = None):
        super().__init__(
            message=message,
            error_type="experiment",
            context=context,
            recovery_suggestions=[
                "Review the experiment spec and output paths",
                "Re-run with --verbose for per-replicate logs",
            ],
            original_exception=original_exception,
        )


class FailureLog:
    """
    Bounded history of non-fatal failures.

    The harness records per-replicate failures here instead of aborting a run.
    """

    def __init__(self, logger: Optional[logging.Logger] = None, limit: int = 100):
        self.logger = logger or logging.getLogger(__name__)
        self.limit = limit
        self.history: List[Dict[str, Any]] = []
        self.count = 0

    def record(self, error: BaseException, context: Optional[Dict[str, Any]] = None) -> LabError:
        lab_error = to_lab_error(error, context)
        self.logger.warning(lab_error.one_line())
        self.count += 1
        self.history.append({
            'timestamp': lab_error.error_info['timestamp'],
            'type': lab_error.error_type,
            'message': lab_error.message,
            'context': lab_error.context,
        })
        if len(self.history) > self.limit:
            self.history = self.history[-self.limit:]
        return lab_error

    def get_history(self) -> List[Dict[str, Any]]:
        return list(self.history)


def to_lab_error(error: BaseException, context: Optional[Dict[str, Any]] = None) -> LabError:
    """Wrap any exception into a LabError, merging extra context."""
    if isinstance(error, LabError):
        if context:
            error.context.update(context)
        return error
    return LabError(
        message=str(error) or type(error).__name__,
        error_type="unexpected",
        context=context,
        original_exception=error,
    )
