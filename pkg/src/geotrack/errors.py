"""Exception types shared across the library."""


class GeotrackError(Exception):
    """Base class for all library errors."""


class TagMismatchError(GeotrackError):
    """Operands belong to different groups or algebras."""


class CutLocusError(GeotrackError):
    """Logarithm requested at or beyond the cut locus (antipodal / pi-rotation)."""


class ConfigurationError(GeotrackError):
    """Invalid parameter object (non-SPD metric, bad gain, malformed run config)."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ChartError(GeotrackError):
    """Point lies outside the domain of the requested trivialization."""


class ChartSwitchNeeded(GeotrackError):
    """Fiber integration left the current chart; caller should re-trivialize.

    Not a failure: carries the time at which the switch is required.
    """

    def __init__(self, time):
        super().__init__(f"chart switch required at t={time}")
        self.time = time


class LiftError(GeotrackError):
    """Horizontal lift could not be constructed."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class UnsupportedFeatureError(GeotrackError):
    """Requested feature is outside the supported model class."""


class InvariantViolationError(GeotrackError):
    """A monitored state-space invariant was violated during simulation."""
