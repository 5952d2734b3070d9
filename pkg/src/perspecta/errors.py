"""Exception hierarchy.

The CLI maps these onto exit codes: ``UsageError`` and ``MatrixFormatError``
to 2, ``DomainError`` and ``NumericError`` to 3.
"""

from __future__ import annotations


class PerspectaError(Exception):
    """Base class for every error raised by this package."""


class MatrixFormatError(PerspectaError, ValueError):
    """Malformed matrix input: wrong shape, non-finite, not Hermitian, bad JSON."""


class DomainError(PerspectaError, ValueError):
    """A spectrum left the domain of the function (or of the PD cone)."""

    def __init__(self, message: str, eigenvalue: float | None = None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class NumericError(PerspectaError, ArithmeticError):
    """A decomposition failed to converge."""


class UsageError(PerspectaError, ValueError):
    """Invalid configuration or unknown identifiers."""


class NonScalarError(PerspectaError, ValueError):
    """A black-box map returned a non-scalar value where a scalar multiple of I was required."""
