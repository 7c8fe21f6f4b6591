"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A scenario file or parameter set violates a documented constraint.

    The message names the offending field (dotted path for nested sections).
    """


class DegenerateGeometry(ValueError):
    """A user location coincides with a base station; link math is undefined."""


class NonFiniteGradient(RuntimeError):
    """An analytic gradient evaluated to NaN/inf; the run is aborted."""
