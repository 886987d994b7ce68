"""Exception hierarchy shared by every module.

All library errors derive from :class:`BayesError`, so callers (the CLI in
particular) can separate domain failures from programming mistakes.
"""

from __future__ import annotations


class BayesError(Exception):
    """Base class for all library errors."""


class DomainError(BayesError, ValueError):
    """An argument lies outside the domain of the operation."""


class MomentError(BayesError):
    """A requested moment does not exist for the given parameters."""


class ConvergenceError(BayesError):
    """An iterative routine failed to reach its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class NoSolutionError(ConvergenceError):
    """A root-finding problem has no solution in the searched region."""


class ProprietyError(BayesError):
    """An improper prior did not yield a proper posterior."""


class RegularityError(BayesError):
    """The family does not satisfy the regularity conditions required."""


class UnsupportedError(BayesError):
    """The operation is not defined for this family."""
