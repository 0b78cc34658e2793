"""Exception types raised across the package."""


class NonlocalPMEError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(NonlocalPMEError, ValueError):
    """A parameter lies outside the admissible range."""


class SingularCellError(NonlocalPMEError, ValueError):
    """A quadrature cell touches the singularity of the measure at the origin."""

    def __init__(self, lo, hi):
        super().__init__(f"singular cell: box [{list(lo)}, {list(hi)}] contains the origin")
        self.lo = lo
        self.hi = hi


class QuadratureError(NonlocalPMEError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        if achieved is not None:
            message = f"{message} (achieved error estimate {achieved:.3e})"
        super().__init__(message)
        self.achieved = achieved


class NotLevyMeasureError(NonlocalPMEError, ValueError):
    """The integral of min(|z|^2, 1) against the measure diverges."""


class GridCompatibilityError(NonlocalPMEError, ValueError):
    pass


class CFLError(NonlocalPMEError, ValueError):
    """The explicit step would not be monotone."""


class EvolutionAbort(NonlocalPMEError, FloatingPointError):
    """A non-finite value appeared during time stepping."""

    def __init__(self, step, message="non-finite value"):
        super().__init__(f"{message} at step {step}")
        self.step = step


class ConfigError(NonlocalPMEError, ValueError):
    """Invalid configuration; ``key`` names the offending ``(section, key)`` when known."""

    def __init__(self, message, line=None, key=None):
        self.bare = message
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key
