"""Exception types shared across the package."""

from __future__ import annotations


class Mkdv2cError(Exception):
    """Base class for all package errors."""


class ConfigError(Mkdv2cError):
    """Invalid or malformed experiment configuration."""


class DomainError(Mkdv2cError):
    """Evaluation requested outside the domain where a quantity is defined.

    Raised for out-of-range dense-output queries (no extrapolation), for
    coupling functions evaluated off their tabulated range, and for
    pole-guarded points of Painleve II solutions.
    """


class SingularStateError(Mkdv2cError):
    """Amplitude guard band hit, or a movable singularity was reached.

    Carries the location and the last state that still satisfied the guard.
    """

    def __init__(self, message, xi=None, last_state=None):
        super().__init__(message)
        self.xi = xi
        self.last_state = last_state


class StepUnderflowError(Mkdv2cError):
    """Adaptive step size shrank below the representable minimum."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ShootingError(Mkdv2cError):
    """Newton shooting failed to converge; carries the residual history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history if history is not None else []


class GridError(Mkdv2cError):
    """A verification grid is too coarse for the requested tolerance."""
