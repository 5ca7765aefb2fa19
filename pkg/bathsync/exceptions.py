"""Exceptions raised by bathsync.

The CLI maps ``ConfigError`` and ``ModelValidationError`` to exit code 1 and every
other ``BathSyncError`` to exit code 2 (numerical failure).
"""


class BathSyncError(Exception):
    """Base class of every error raised by this package."""


class ConfigError(BathSyncError):
    """Invalid scenario configuration or command-line input."""


class ModelValidationError(BathSyncError):
    """A model failed validation. ``violations`` holds the validator's report verbatim."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        count = len(self.violations)
        super().__init__(f"model failed validation with {count} violation(s):\n{lines}")


class ProjectorError(BathSyncError, ValueError):
    """A flavor matrix passed as a projector is not a rank-1 projector."""


class SpectrumError(BathSyncError):
    """Bound-state search returned an unexpected number of roots."""


class RateError(BathSyncError, ValueError):
    """Rates requested for an ill-defined energy difference."""


class IntegrationError(BathSyncError):
    """The adaptive integrator could not reach the requested time."""


class TimeDependentGeneratorError(BathSyncError):
    """An exact exponential propagator was asked to handle a time-dependent generator."""


class InvariantViolation(BathSyncError):
    """A trajectory broke trace, Hermiticity or positivity gates."""


class NoDominantLineError(BathSyncError):
    """A spectrum has no line standing clearly above its median."""
