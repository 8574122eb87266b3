"""Semantic exception hierarchy.

The CLI maps these onto exit codes: user-facing input problems exit 1,
broken internal invariants exit 2.
"""


class PtdaError(Exception):
    """Base class for all package errors."""


class DomainError(PtdaError, ValueError):
    """A numeric argument violates a documented precondition."""


class InputError(PtdaError, ValueError):
    """Malformed user input: files, shapes, labels, configuration."""


class ContractViolation(PtdaError, RuntimeError):
    """An internal invariant that callers cannot trigger legitimately."""
