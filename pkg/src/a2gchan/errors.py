"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class A2GError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(A2GError, ValueError):
    """A parameter violates its documented domain."""


class WrongModelError(A2GError, TypeError):
    """An operation was called with a model family it does not support."""


class NumericFailure(A2GError, RuntimeError):
    """A numerical routine did not reach its requested accuracy.

    ``achieved`` carries the best error estimate (or convergence gap)
    reached before giving up, when one is available.
    """

    def __init__(self, message: str, achieved: float | None = None, **diagnostics):
        super().__init__(message)
        self.achieved = achieved
        self.diagnostics = diagnostics


class BudgetExceededError(NumericFailure):
    """A computation would exceed its configured evaluation budget."""


class UndefinedEstimateError(A2GError, ValueError):
    """A Monte Carlo estimate has no samples to average (e.g. empty bin)."""
