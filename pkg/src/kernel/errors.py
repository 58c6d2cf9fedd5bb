"""
Exception hierarchy for GP-Localize.

Each error also subclasses the closest builtin so callers that only know
ValueError / ArithmeticError still catch them.
"""

from typing import Optional


class GPLocalizeError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(GPLocalizeError, ValueError):
    """An input violates an operation's precondition."""


class IllConditionedError(GPLocalizeError, ArithmeticError):
    """A covariance matrix stayed singular after jitter escalation."""


class BufferProtocolError(GPLocalizeError, RuntimeError):
    """The recent-observation buffer was used out of protocol."""


class DegenerateBeliefError(GPLocalizeError, ArithmeticError):
    """All particle weights underflowed and recovery is disabled."""


class ConfigError(GPLocalizeError, ValueError):
    """An experiment configuration could not be loaded."""


class FieldFormatError(GPLocalizeError, ValueError):
    """A field or report file is malformed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
