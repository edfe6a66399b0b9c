"""Exception types shared across the package."""


class HolonomyLabError(Exception):
    """Base class for all package errors."""


class MonotonicityLost(HolonomyLabError):
    """A circle map's lift derivative dropped to <= 0 somewhere.

    Usually signals that a composed/iterated diffeomorphism is no longer
    resolved on the sampling grid.
    """


class ToleranceNotMet(HolonomyLabError):
    """Root finding failed to reach the requested tolerance."""


class OrderTooHigh(HolonomyLabError):
    """Spectral tail too energetic for a reliable derivative of this order."""


class OutOfLocalRange(HolonomyLabError):
    """Bracket coordinates exceed the local leaf radius."""


class NoContraction(HolonomyLabError):
    """Holonomy increments fail to decay geometrically."""


class NotClosed(HolonomyLabError):
    """A cycle-weight computation was handed a non-closed path."""


class PathIndependenceViolated(HolonomyLabError):
    """Transported values disagree beyond the error budget: cycle obstruction."""


class Unbounded(HolonomyLabError):
    """Derivative growth detected where a bounded cocycle was required."""


class ConfigInvalid(HolonomyLabError):
    """Experiment configuration failed validation."""

    def __init__(self, field, message):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")
