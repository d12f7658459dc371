"""Typed errors shared across the toolkit."""


class GreenstockError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(GreenstockError, ValueError):
    """A parameter violates its documented domain."""


class DegenerateGameError(GreenstockError):
    """The game has no interior equilibrium (alpha=1, b=0 or c_s=0)."""


class ConvergenceError(GreenstockError):
    """Iterative solver failed to converge; carries the iterate trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class AllGridRegimeError(GreenstockError):
    """Grid power dominates at any demand level (p2 <= p1 + p)."""
